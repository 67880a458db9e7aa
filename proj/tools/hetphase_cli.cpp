// Command-line driver: K_H solves, single minimizations, schedules, isotropy and exponent probes.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "hetphase/experiment.hpp"

using namespace hetphase;
using nlohmann::json;

namespace {

struct Globals {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

ExperimentConfig load_config(const Globals &g) {
    ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(g.config);
    if (g.seed) {
        cfg.seed = *g.seed;
        cfg.geodesic.seed = *g.seed;
    }
    if (g.threads) {
        if (*g.threads < 1) throw std::invalid_argument("--threads must be >= 1");
        cfg.threads = *g.threads;
    }
    if (!g.out.empty()) cfg.output_path = g.out;
    return cfg;
}

/// Writes to the --out path, or stdout when none was given.
class Output {
public:
    explicit Output(const std::string &path) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary | std::ios::trunc);
            if (!file_) throw std::runtime_error("cannot open " + path + " for writing");
        }
    }
    std::ostream &stream() { return file_.is_open() ? static_cast<std::ostream &>(file_) : std::cout; }

private:
    std::ofstream file_;
};

json path_json(const Path &p) {
    json nodes = json::array();
    for (const Vec &v : p.nodes) {
        json node = json::array();
        for (int i = 0; i < v.dim(); ++i) node.push_back(v[i]);
        nodes.push_back(node);
    }
    return nodes;
}

int cmd_kh(const ExperimentConfig &cfg, bool oracle, bool with_path) {
    const Model model = build_model(cfg);
    json j;
    j["kh"] = model.kh;
    j["kh_string"] = model.geodesic.kh;
    j["iterations"] = model.geodesic.iterations;
    j["converged"] = model.geodesic.converged;
    j["valid"] = model.geodesic.valid;
    j["max_norm"] = model.geodesic.max_norm;
    j["truncation_radius"] = model.tspec->radius();
    j["cap"] = model.tspec->cap();
    if (model.spec->state_dim() == 1) j["kh_quadrature"] = kh_1d(*model.hp, model.spec->a()[0], model.spec->b()[0]);
    if (oracle && model.spec->state_dim() <= 3) {
        const Vec &a = model.spec->a(), &b = model.spec->b();
        const double pad = 0.5 * distance(a, b);
        Vec lo(a.dim()), hi(a.dim());
        for (int i = 0; i < a.dim(); ++i) {
            lo[i] = std::min(a[i], b[i]) - pad;
            hi[i] = std::max(a[i], b[i]) + pad;
        }
        const OracleResult o = dijkstra_oracle(*model.hp, a, b, lo, hi, cfg.oracle_per_axis, cfg.oracle_order);
        j["kh_oracle"] = o.cost;
        j["oracle_per_axis"] = cfg.oracle_per_axis;
    }
    if (with_path) j["path"] = path_json(model.geodesic.path);
    Output out(cfg.output_path);
    out.stream() << j.dump(2) << '\n';
    return model.geodesic.converged ? 0 : 1;
}

int cmd_minimize(const ExperimentConfig &cfg, std::optional<int> row, std::optional<double> eps,
                 std::optional<double> delta, std::optional<double> theta_deg, const std::string &field_path) {
    const Model model = build_model(cfg);
    const int n = row.value_or(std::max(0, cfg.schedule.n_max - 1));
    const double e = eps.value_or(cfg.schedule.eps(n));
    const double d = delta.value_or(cfg.schedule.delta(n));
    TransitionProblem problem = TransitionProblem::on_unit_box(model.spec->space_dim(), e, d, model.tspec, cfg.max_cells);
    problem.collar = cfg.collar;
    if (theta_deg) {
        problem.geometry = TransitionProblem::Geometry::Planar;
        problem.theta = *theta_deg * std::numbers::pi / 180.0;
        problem.offset = corner_safe_offset(problem.theta);
    }
    SolverOptions sopts = cfg.solver;
    sopts.record_history = false;
    const MinimizeResult r = minimize_diffuse(problem, sopts);
    if (!field_path.empty()) write_field(r.field, field_path);
    const GridField proj = project_to_wells(r.field, model.spec->a(), model.spec->b());
    const PerimeterReport per = perimeter(proj, model.spec->a(), model.spec->b());
    json j;
    j["eps"] = e;
    j["delta"] = d;
    j["cells_per_axis"] = problem.counts[0] - 1;
    j["energy"] = r.report.total;
    j["potential_term"] = r.report.potential_term;
    j["gradient_term"] = r.report.gradient_term;
    j["untruncated_energy"] = r.untruncated_total;
    j["homogenized_energy"] = homogenized_energy(r.field, d, *model.hp);
    j["discrepancy"] = discrepancy(r.field, e, d, *model.tspec, *model.hp);
    j["perimeter"] = per.reconstructed;
    j["face_perimeter"] = per.face_count;
    j["kh"] = model.kh;
    j["iterations"] = r.iterations;
    j["rejected_steps"] = r.rejected_steps;
    j["converged"] = r.converged;
    j["truncation_active"] = r.truncation_active;
    Output out(cfg.output_path);
    out.stream() << j.dump(2) << '\n';
    return r.converged && !r.truncation_active ? 0 : 1;
}

int cmd_schedule(const ExperimentConfig &cfg) {
    const OutputFormat format = parse_format(cfg.output_format);
    const Model model = build_model(cfg);
    Output out(cfg.output_path);
    std::ostream &os = out.stream();
    if (format == OutputFormat::Csv) os << to_csv({}) << std::flush;
    const auto rows = run_schedule(cfg, model, false, [&](const ExperimentRow &r) {
        if (format == OutputFormat::Csv) {
            const std::string csv = to_csv({r});
            os << csv.substr(csv.find('\n') + 1) << std::flush;
        }
        std::fprintf(stderr, "row %d eps=%.4g delta=%.4g F=%.8g D=%.3e %s\n", r.n, r.eps, r.delta, r.f_n, r.discrepancy,
                     r.status.c_str());
    });
    if (format == OutputFormat::Json) os << to_json(rows).dump(2) << '\n';
    bool ok = true;
    for (const auto &r : rows) ok = ok && r.ok();
    try {
        const LogLogFit f = fit_scaling(rows);
        std::fprintf(stderr, "fit: slope %.4f intercept %.4f r2 %.4f\n", f.slope, f.intercept, f.r2);
    } catch (const ZeroDiscrepancyError &) {
        std::fprintf(stderr, "fit: discrepancy vanishes on every row\n");
    } catch (const std::invalid_argument &e) {
        std::fprintf(stderr, "fit: %s\n", e.what());
    }
    return ok ? 0 : 1;
}

int cmd_isotropy(const ExperimentConfig &cfg, const std::vector<double> &angles) {
    const Model model = build_model(cfg);
    const IsotropyResult res = isotropy_study(cfg, model, angles.empty() ? cfg.isotropy_angles_deg : angles);
    Output out(cfg.output_path);
    std::ostream &os = out.stream();
    os << "theta_deg,offset,energy,perimeter,energy_per_length,iterations,converged\n";
    bool ok = true;
    for (const auto &r : res.rows) {
        os << format_double(r.theta_deg) << ',' << format_double(r.offset) << ',' << format_double(r.energy) << ','
           << format_double(r.perimeter) << ',' << format_double(r.energy_per_length) << ',' << r.iterations << ','
           << (r.converged ? 1 : 0) << '\n';
        ok = ok && r.converged;
    }
    std::fprintf(stderr, "spread %.4e\n", res.spread);
    return ok ? 0 : 1;
}

int cmd_probe(const ExperimentConfig &cfg, const std::vector<double> &alphas) {
    const Model model = build_model(cfg);
    const auto summaries = probe_exponent(cfg, model, alphas.empty() ? cfg.probe_alphas : alphas);
    Output out(cfg.output_path);
    std::ostream &os = out.stream();
    const std::string header = to_csv({});
    os << "alpha," << header;
    for (const auto &s : summaries) {
        const std::string csv = to_csv(s.rows);
        std::size_t pos = csv.find('\n') + 1;
        while (pos < csv.size()) {
            const std::size_t end = csv.find('\n', pos);
            os << format_double(s.alpha) << ',' << csv.substr(pos, end - pos + 1);
            pos = end + 1;
        }
        std::fprintf(stderr, "alpha %.4f: discrepancy %s, |F - K_H P| %s\n", s.alpha,
                     s.discrepancy_decays ? "decays" : "does not decay", s.gap_decays ? "decays" : "does not decay");
    }
    return 0;
}

int cmd_validate(const ExperimentConfig &cfg) {
    const PotentialSpec spec = make_potential(cfg.potential);
    ValidationOptions vopts;
    vopts.seed = cfg.seed;
    const ValidationReport rep = validate_hypotheses(spec, vopts);
    json j = json::array();
    for (const auto &c : rep.checks)
        j.push_back({{"name", c.name}, {"passed", c.passed}, {"skipped", c.skipped}, {"witness", c.witness}});
    Output out(cfg.output_path);
    out.stream() << j.dump(2) << '\n';
    return rep.all_passed() ? 0 : 1;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Heterogeneous phase-transition energies: transition costs, minimizers and scaling studies"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "output file (default: stdout)");
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--threads", g.threads, "worker threads for independent rows and angles");

    auto *kh = app.add_subcommand("kh", "transition constant K_H by the string method and the lattice oracle");
    bool no_oracle = false, with_path = false;
    kh->add_flag("--no-oracle", no_oracle, "skip the Dijkstra oracle");
    kh->add_flag("--path", with_path, "include the geodesic nodes");

    auto *mn = app.add_subcommand("minimize", "one diffuse-interface minimization");
    std::optional<int> row;
    std::optional<double> eps, delta, theta;
    std::string field_path;
    mn->add_option("--row", row, "schedule row (default: finest)");
    mn->add_option("--eps", eps, "override eps");
    mn->add_option("--delta", delta, "override delta");
    mn->add_option("--theta", theta, "planar interface normal angle in degrees (N = 2)");
    mn->add_option("--field", field_path, "write the minimizer checkpoint here");

    auto *sc = app.add_subcommand("schedule", "full convergence study over the scaling schedule");
    auto *iso = app.add_subcommand("isotropy", "energy per unit length against the interface normal");
    std::vector<double> angles;
    iso->add_option("--angles", angles, "normal angles in degrees");
    auto *pr = app.add_subcommand("probe", "schedules for exponent ratios around 2/3, no pass/fail");
    std::vector<double> alphas;
    pr->add_option("--alpha", alphas, "exponent ratios in (0, 1)");
    auto *va = app.add_subcommand("validate", "sampled checks of the structural hypotheses on W");

    CLI11_PARSE(app, argc, argv);

    try {
        const ExperimentConfig cfg = load_config(g);
        if (*kh) return cmd_kh(cfg, !no_oracle, with_path);
        if (*mn) return cmd_minimize(cfg, row, eps, delta, theta, field_path);
        if (*sc) return cmd_schedule(cfg);
        if (*iso) return cmd_isotropy(cfg, angles);
        if (*pr) return cmd_probe(cfg, alphas);
        if (*va) return cmd_validate(cfg);
    } catch (const RegimeError &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
