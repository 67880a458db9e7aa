#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hetphase/geodesic.hpp"
#include "hetphase/minimize.hpp"

namespace hetphase {

struct PotentialConfig {
    std::string base_well = "quartic_scalar";
    std::vector<double> a{-1.0};
    std::vector<double> b{1.0};
    double anisotropy = 2.0;
    std::string modulation = "checkerboard"; // constant | sine | checkerboard
    std::vector<double> modulation_params{1.0, 2.0};
    int space_dim = 2;
    double growth_exponent = 4.0;
    double growth_constant = 0.0;  // <= 0: derived from the family
    double truncation_radius = 0.0; // <= 0: 2 (|a| + |b| + |a - b|)
    double safety_factor = 1.05;
    int quadrature_resolution = 0; // <= 0: 64 for N <= 2, 16 for N = 3
};

/// eps_n = eps0 rho^n, delta_n = delta0 rho^(alpha n), n = 0 .. n_max - 1.
struct ScalingSchedule {
    double eps0 = 1.0 / 32.0;
    double delta0 = 0.1;
    double rho = 2.0 / 3.0;
    double alpha = 0.5;
    int n_max = 6;

    double eps(int n) const;
    double delta(int n) const;
    /// eps_n / delta_n^{3/2}
    double ratio(int n) const;
    /// Throws std::invalid_argument for malformed schedules and RegimeError for alpha >= 2/3
    /// unless `probe` is set.
    void validate(bool probe) const;
};

class RegimeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ZeroDiscrepancyError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct ExperimentConfig {
    PotentialConfig potential;
    ScalingSchedule schedule;
    SolverOptions solver;
    GeodesicOptions geodesic;
    int oracle_per_axis = 401;
    int oracle_order = 2;
    int max_cells = 1024;
    double collar = 8.0;
    std::vector<double> isotropy_angles_deg{0.0, 30.0, 45.0, 60.0, 90.0};
    std::vector<double> probe_alphas{0.5, 2.0 / 3.0, 0.9};
    std::string output_format = "csv";
    std::string output_path;
    bool record_wall_time = true;
    std::uint64_t seed = 1;
    int threads = 1;

    static ExperimentConfig from_json(const nlohmann::json &j);
    static ExperimentConfig load(const std::filesystem::path &path);
    nlohmann::json to_json() const;
};

/// Potential, truncation, homogenization and K_H derived from a config.
struct Model {
    std::shared_ptr<const PotentialSpec> spec;
    std::shared_ptr<const TruncatedPotential> tspec;
    std::shared_ptr<const HomogenizedPotential> hp; // over the truncated potential
    GeodesicResult geodesic;
    double kh = 0.0;
    double lipschitz = 0.0;
    double poincare_constant = 0.0;
};

PotentialSpec make_potential(const PotentialConfig &cfg);
/// Throws std::runtime_error when the geodesic leaves |p| <= R.
Model build_model(const ExperimentConfig &cfg);

struct ExperimentRow {
    int n = 0;
    double eps = 0.0;
    double delta = 0.0;
    double eps_over_delta_3_2 = 0.0;
    double f_n = 0.0;
    double f_h_n = 0.0;
    double discrepancy = 0.0;
    double discrepancy_interior = 0.0;
    double discrepancy_strip = 0.0;
    double poincare_bound = 0.0;
    double dirichlet_budget = 0.0;
    double perimeter = 0.0;
    double face_perimeter = 0.0;
    double kh_times_perimeter = 0.0;
    double l1_to_projection = 0.0;
    int cells = 0;
    int iterations = 0;
    std::string status = "ok"; // ok | unconverged | failed: <reason>
    double wall_time_s = 0.0;

    bool ok() const { return status == "ok"; }
};

/// Column names, in emission order.
const std::vector<std::string> &row_columns();

/// Solves the flat-interface Dirichlet problem at (eps, delta) and evaluates every row quantity.
ExperimentRow solve_row(const ExperimentConfig &cfg, const Model &model, int n, double eps, double delta);

using RowSink = std::function<void(const ExperimentRow &)>;

/// Rows for n = 0 .. n_max - 1, handed to `sink` in order as soon as each is available.
std::vector<ExperimentRow> run_schedule(const ExperimentConfig &cfg, const Model &model, bool probe = false,
                                        const RowSink &sink = {});
std::vector<ExperimentRow> run_schedule(const ExperimentConfig &cfg, bool probe = false);

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    int points = 0;
};

/// Least squares of log y against log x over the pairs with x, y > 0. Needs >= 3 pairs.
LogLogFit fit_loglog(const std::vector<double> &x, const std::vector<double> &y);
/// log D_n against log(eps_n / delta_n^{3/2}); throws ZeroDiscrepancyError when every D_n is 0.
LogLogFit fit_scaling(const std::vector<ExperimentRow> &rows);

struct IsotropyRow {
    double theta_deg = 0.0;
    double offset = 0.0;
    double energy = 0.0;
    double perimeter = 0.0;
    double energy_per_length = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct IsotropyResult {
    std::vector<IsotropyRow> rows;
    double spread = 0.0; // (max - min) / mean of energy per unit length
};

/// Interface offset in [-0.3, 0.3] keeping the line away from the unit-square corners.
double corner_safe_offset(double theta);

/// Planar interfaces of normal angle theta at the finest schedule row.
IsotropyResult isotropy_study(const ExperimentConfig &cfg, const Model &model, const std::vector<double> &angles_deg);

struct ProbeSummary {
    double alpha = 0.0;
    std::vector<ExperimentRow> rows;
    bool discrepancy_decays = false;
    bool gap_decays = false; // |F_n - K_H P_n|
};

std::vector<ProbeSummary> probe_exponent(const ExperimentConfig &cfg, const Model &model, const std::vector<double> &alphas);

enum class OutputFormat { Csv, Json };
OutputFormat parse_format(const std::string &name);

std::string to_csv(const std::vector<ExperimentRow> &rows);
nlohmann::json to_json(const std::vector<ExperimentRow> &rows);
std::vector<ExperimentRow> rows_from_csv(const std::string &text);
std::vector<ExperimentRow> rows_from_json(const nlohmann::json &j);

/// Writes the rows; I/O failures are reported with the path.
void emit(const std::vector<ExperimentRow> &rows, OutputFormat format, const std::filesystem::path &path);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

} // namespace hetphase
