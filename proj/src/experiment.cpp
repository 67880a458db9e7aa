#include "hetphase/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace hetphase {

namespace {

Vec vec_from(const std::vector<double> &v, const char *what) {
    if (v.empty() || v.size() > static_cast<std::size_t>(kMaxDim))
        throw std::invalid_argument(std::string("config: ") + what + " must have 1 to 3 components");
    return Vec::from_span(v);
}

template <class T>
void read_opt(const nlohmann::json &j, const char *key, T &out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

const nlohmann::json &section(const nlohmann::json &j, const char *key) {
    static const nlohmann::json empty = nlohmann::json::object();
    if (!j.contains(key)) return empty;
    const auto &s = j.at(key);
    if (!s.is_object()) throw std::invalid_argument(std::string("config: section '") + key + "' must be an object");
    return s;
}

SolverOptions::Scheme scheme_from(const std::string &s) {
    if (s == "preconditioned") return SolverOptions::Scheme::Preconditioned;
    if (s == "explicit") return SolverOptions::Scheme::Explicit;
    throw std::invalid_argument("config: unknown solver scheme '" + s + "'");
}

std::string scheme_name(SolverOptions::Scheme s) {
    return s == SolverOptions::Scheme::Explicit ? "explicit" : "preconditioned";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

double ScalingSchedule::eps(int n) const { return eps0 * std::pow(rho, n); }
double ScalingSchedule::delta(int n) const { return delta0 * std::pow(rho, alpha * n); }
double ScalingSchedule::ratio(int n) const { return eps(n) / std::pow(delta(n), 1.5); }

void ScalingSchedule::validate(bool probe) const {
    if (!(eps0 > 0.0) || !(delta0 > 0.0)) throw std::invalid_argument("schedule: eps0 and delta0 must be positive");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("schedule: rho must lie in (0, 1)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("schedule: alpha must lie in (0, 1)");
    if (n_max < 0) throw std::invalid_argument("schedule: n_max must be non-negative");
    if (!probe && alpha >= 2.0 / 3.0)
        throw RegimeError("schedule: alpha >= 2/3 leaves eps/delta^{3/2} bounded away from 0; use probe mode");
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json &j) {
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    ExperimentConfig c;

    const auto &p = section(j, "potential");
    read_opt(p, "base_well", c.potential.base_well);
    read_opt(p, "a", c.potential.a);
    read_opt(p, "b", c.potential.b);
    read_opt(p, "anisotropy", c.potential.anisotropy);
    read_opt(p, "modulation", c.potential.modulation);
    read_opt(p, "modulation_params", c.potential.modulation_params);
    read_opt(p, "space_dim", c.potential.space_dim);
    read_opt(p, "growth_exponent", c.potential.growth_exponent);
    read_opt(p, "growth_constant", c.potential.growth_constant);
    read_opt(p, "truncation_radius", c.potential.truncation_radius);
    read_opt(p, "safety_factor", c.potential.safety_factor);
    read_opt(p, "quadrature_resolution", c.potential.quadrature_resolution);

    const auto &s = section(j, "schedule");
    read_opt(s, "eps0", c.schedule.eps0);
    read_opt(s, "delta0", c.schedule.delta0);
    read_opt(s, "rho", c.schedule.rho);
    read_opt(s, "alpha", c.schedule.alpha);
    read_opt(s, "n_max", c.schedule.n_max);

    const auto &pr = section(j, "problem");
    read_opt(pr, "max_cells", c.max_cells);
    read_opt(pr, "collar", c.collar);

    const auto &so = section(j, "solver");
    if (so.contains("scheme")) c.solver.scheme = scheme_from(so.at("scheme").get<std::string>());
    read_opt(so, "tol", c.solver.tol);
    read_opt(so, "max_iter", c.solver.max_iter);
    read_opt(so, "dt", c.solver.dt);
    c.solver.record_history = false;

    const auto &g = section(j, "geodesic");
    read_opt(g, "nodes", c.geodesic.nodes);
    read_opt(g, "tol", c.geodesic.tol);
    read_opt(g, "window", c.geodesic.window);
    read_opt(g, "max_iter", c.geodesic.max_iter);
    read_opt(g, "jitter", c.geodesic.jitter);
    read_opt(g, "oracle_per_axis", c.oracle_per_axis);
    read_opt(g, "oracle_order", c.oracle_order);

    const auto &o = section(j, "output");
    read_opt(o, "format", c.output_format);
    read_opt(o, "path", c.output_path);
    read_opt(o, "record_wall_time", c.record_wall_time);
    parse_format(c.output_format);

    read_opt(section(j, "isotropy"), "angles_deg", c.isotropy_angles_deg);
    read_opt(section(j, "probe"), "alphas", c.probe_alphas);

    read_opt(j, "seed", c.seed);
    read_opt(j, "threads", c.threads);
    c.geodesic.seed = c.seed;
    if (c.threads < 1) throw std::invalid_argument("config: threads must be >= 1");
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw std::runtime_error("config " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["potential"] = {{"base_well", potential.base_well},
                      {"a", potential.a},
                      {"b", potential.b},
                      {"anisotropy", potential.anisotropy},
                      {"modulation", potential.modulation},
                      {"modulation_params", potential.modulation_params},
                      {"space_dim", potential.space_dim},
                      {"growth_exponent", potential.growth_exponent},
                      {"growth_constant", potential.growth_constant},
                      {"truncation_radius", potential.truncation_radius},
                      {"safety_factor", potential.safety_factor},
                      {"quadrature_resolution", potential.quadrature_resolution}};
    j["schedule"] = {{"eps0", schedule.eps0},
                     {"delta0", schedule.delta0},
                     {"rho", schedule.rho},
                     {"alpha", schedule.alpha},
                     {"n_max", schedule.n_max}};
    j["problem"] = {{"max_cells", max_cells}, {"collar", collar}};
    j["solver"] = {{"scheme", scheme_name(solver.scheme)},
                   {"tol", solver.tol},
                   {"max_iter", solver.max_iter},
                   {"dt", solver.dt}};
    j["geodesic"] = {{"nodes", geodesic.nodes},
                     {"tol", geodesic.tol},
                     {"window", geodesic.window},
                     {"max_iter", geodesic.max_iter},
                     {"jitter", geodesic.jitter},
                     {"oracle_per_axis", oracle_per_axis},
                     {"oracle_order", oracle_order}};
    j["output"] = {{"format", output_format}, {"path", output_path}, {"record_wall_time", record_wall_time}};
    j["isotropy"] = {{"angles_deg", isotropy_angles_deg}};
    j["probe"] = {{"alphas", probe_alphas}};
    j["seed"] = seed;
    j["threads"] = threads;
    return j;
}

PotentialSpec make_potential(const PotentialConfig &cfg) {
    const Vec a = vec_from(cfg.a, "potential.a");
    const Vec b = vec_from(cfg.b, "potential.b");
    if (a.dim() != b.dim()) throw std::invalid_argument("config: wells a and b differ in dimension");
    BaseWell base = BaseWell::from_name(cfg.base_well, a, b, cfg.anisotropy);
    const auto &mp = cfg.modulation_params;
    auto param = [&](std::size_t i) {
        if (mp.size() <= i) throw std::invalid_argument("config: modulation '" + cfg.modulation + "' needs more parameters");
        return mp[i];
    };
    Modulation m = Modulation::constant(1.0);
    if (cfg.modulation == "constant") m = Modulation::constant(mp.empty() ? 1.0 : mp[0]);
    else if (cfg.modulation == "sine") m = Modulation::sine(param(0));
    else if (cfg.modulation == "checkerboard") m = Modulation::checkerboard(param(0), param(1));
    else throw std::invalid_argument("config: unknown modulation '" + cfg.modulation + "'");
    if (cfg.space_dim < 1 || cfg.space_dim > kMaxDim) throw std::invalid_argument("config: space_dim must be 1, 2 or 3");
    return PotentialSpec(std::move(base), m, cfg.space_dim, cfg.growth_exponent, cfg.growth_constant);
}

Model build_model(const ExperimentConfig &cfg) {
    Model model;
    model.spec = std::make_shared<PotentialSpec>(make_potential(cfg.potential));
    const double radius =
        cfg.potential.truncation_radius > 0.0 ? cfg.potential.truncation_radius : default_truncation_radius(*model.spec);
    TruncationOptions topts;
    topts.safety_factor = cfg.potential.safety_factor;
    model.tspec = std::make_shared<TruncatedPotential>(truncate(*model.spec, radius, topts));
    model.hp = std::make_shared<HomogenizedPotential>(*model.tspec, cfg.potential.quadrature_resolution);

    GeodesicOptions gopts = cfg.geodesic;
    gopts.radius = radius;
    model.geodesic = minimize_KH(*model.hp, model.spec->a(), model.spec->b(), gopts);
    model.kh = model.spec->state_dim() == 1 ? kh_1d(*model.hp, model.spec->a()[0], model.spec->b()[0])
                                            : model.geodesic.kh;
    if (!model.geodesic.valid)
        throw std::runtime_error("geodesic leaves the ball |p| <= R; increase potential.truncation_radius");
    model.lipschitz = model.tspec->lipschitz();
    model.poincare_constant = unit_cube_poincare_constant(model.spec->space_dim());
    return model;
}

const std::vector<std::string> &row_columns() {
    static const std::vector<std::string> cols{
        "n", "eps", "delta", "eps_over_delta_3_2", "f_n", "f_h_n", "discrepancy", "discrepancy_interior",
        "discrepancy_strip", "poincare_bound", "dirichlet_budget", "perimeter", "face_perimeter",
        "kh_times_perimeter", "l1_to_projection", "cells", "iterations", "status", "wall_time_s"};
    return cols;
}

ExperimentRow solve_row(const ExperimentConfig &cfg, const Model &model, int n, double eps, double delta) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentRow row;
    row.n = n;
    row.eps = eps;
    row.delta = delta;
    row.eps_over_delta_3_2 = eps / std::pow(delta, 1.5);
    try {
        TransitionProblem problem =
            TransitionProblem::on_unit_box(model.spec->space_dim(), eps, delta, model.tspec, cfg.max_cells);
        problem.collar = cfg.collar;
        SolverOptions sopts = cfg.solver;
        sopts.record_history = false;
        MinimizeResult r = minimize_diffuse(problem, sopts);
        const GridField &u = r.field;
        row.cells = static_cast<int>(u.cell_count());
        row.iterations = r.iterations;
        row.f_n = r.report.total;
        row.dirichlet_budget = r.report.gradient_term;
        row.f_h_n = homogenized_energy(u, delta, *model.hp);
        const DiscrepancyParts parts = discrepancy_parts(u, eps, delta, *model.tspec, *model.hp);
        row.discrepancy = parts.total;
        row.discrepancy_interior = parts.interior;
        row.discrepancy_strip = parts.strip;
        row.poincare_bound = poincare_bound(u, eps, delta, model.lipschitz, model.poincare_constant);
        const GridField proj = project_to_wells(u, model.spec->a(), model.spec->b());
        const PerimeterReport per = perimeter(proj, model.spec->a(), model.spec->b());
        row.perimeter = per.reconstructed;
        row.face_perimeter = per.face_count;
        row.kh_times_perimeter = model.kh * per.reconstructed;
        row.l1_to_projection = l1_distance(u, proj);

        if (r.truncation_active) row.status = "failed: field left |p| <= R";
        else if (std::abs(r.untruncated_total - r.report.total) > 1e-12 * std::max(1.0, std::abs(r.report.total)))
            row.status = "failed: truncated and untruncated energies differ";
        else if (!r.converged) row.status = "unconverged";
    } catch (const std::exception &e) {
        row.status = std::string("failed: ") + e.what();
    }
    row.wall_time_s = cfg.record_wall_time ? seconds_since(t0) : 0.0;
    return row;
}

namespace {

/// Runs `count` independent jobs on `threads` workers; results reach `deliver` in index order.
template <class Result, class Job, class Deliver>
std::vector<Result> ordered_pool(int count, int threads, Job job, Deliver deliver) {
    std::vector<Result> out(count);
    if (count == 0) return out;
    if (threads <= 1 || count == 1) {
        for (int i = 0; i < count; ++i) {
            out[i] = job(i);
            deliver(out[i]);
        }
        return out;
    }
    std::vector<char> done(count, 0);
    std::mutex mu;
    std::condition_variable cv;
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            Result r = job(i);
            std::lock_guard lock(mu);
            out[i] = std::move(r);
            done[i] = 1;
            cv.notify_all();
        }
    };
    std::vector<std::jthread> pool;
    for (int t = 0; t < std::min(threads, count); ++t) pool.emplace_back(worker);
    for (int i = 0; i < count; ++i) {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return done[i] != 0; });
        const Result &r = out[i];
        lock.unlock();
        deliver(r);
    }
    return out;
}

} // namespace

std::vector<ExperimentRow> run_schedule(const ExperimentConfig &cfg, const Model &model, bool probe,
                                        const RowSink &sink) {
    cfg.schedule.validate(probe);
    const ScalingSchedule &s = cfg.schedule;
    return ordered_pool<ExperimentRow>(
        s.n_max, cfg.threads, [&](int n) { return solve_row(cfg, model, n, s.eps(n), s.delta(n)); },
        [&](const ExperimentRow &r) {
            if (sink) sink(r);
        });
}

std::vector<ExperimentRow> run_schedule(const ExperimentConfig &cfg, bool probe) {
    cfg.schedule.validate(probe);
    if (cfg.schedule.n_max == 0) return {};
    const Model model = build_model(cfg);
    return run_schedule(cfg, model, probe);
}

LogLogFit fit_loglog(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_loglog: size mismatch");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    const std::size_t m = lx.size();
    if (m < 3) throw std::invalid_argument("fit_loglog: need at least 3 positive pairs");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_loglog: abscissae are all equal");
    LogLogFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    f.points = static_cast<int>(m);
    return f;
}

LogLogFit fit_scaling(const std::vector<ExperimentRow> &rows) {
    std::vector<double> x, y;
    bool any_positive = false;
    for (const auto &r : rows) {
        x.push_back(r.eps_over_delta_3_2);
        y.push_back(r.discrepancy);
        any_positive = any_positive || r.discrepancy > 0.0;
    }
    if (!rows.empty() && !any_positive)
        throw ZeroDiscrepancyError("fit_scaling: every discrepancy is zero (homogeneous modulation)");
    return fit_loglog(x, y);
}

double corner_safe_offset(double theta) {
    const Vec normal{std::cos(theta), std::sin(theta)};
    std::vector<double> corners;
    for (double cx : {-0.5, 0.5})
        for (double cy : {-0.5, 0.5}) corners.push_back(cx * normal[0] + cy * normal[1]);
    double best = 0.0, best_gap = -1.0;
    // Scan outward from 0 so that ties prefer the centred line.
    for (int k = 0; k <= 300; ++k) {
        for (int sign : {1, -1}) {
            if (k == 0 && sign < 0) continue;
            const double s = sign * 0.001 * k;
            double gap = std::numeric_limits<double>::infinity();
            for (double c : corners) gap = std::min(gap, std::abs(s - c));
            if (gap > best_gap + 1e-12) {
                best_gap = gap;
                best = s;
            }
        }
    }
    return best;
}

IsotropyResult isotropy_study(const ExperimentConfig &cfg, const Model &model, const std::vector<double> &angles_deg) {
    if (model.spec->space_dim() != 2) throw std::invalid_argument("isotropy_study: requires N = 2");
    if (cfg.schedule.n_max < 1) throw std::invalid_argument("isotropy_study: empty schedule");
    cfg.schedule.validate(false);
    const int n = cfg.schedule.n_max - 1;
    const double eps = cfg.schedule.eps(n), delta = cfg.schedule.delta(n);
    const double pi = std::acos(-1.0);

    IsotropyResult res;
    res.rows = ordered_pool<IsotropyRow>(
        static_cast<int>(angles_deg.size()), cfg.threads,
        [&](int i) {
            IsotropyRow row;
            row.theta_deg = angles_deg[i];
            const double theta = angles_deg[i] * pi / 180.0;
            TransitionProblem problem = TransitionProblem::on_unit_box(2, eps, delta, model.tspec, cfg.max_cells);
            problem.geometry = TransitionProblem::Geometry::Planar;
            problem.theta = theta;
            problem.offset = corner_safe_offset(theta);
            problem.collar = cfg.collar;
            SolverOptions sopts = cfg.solver;
            sopts.record_history = false;
            MinimizeResult r = minimize_diffuse(problem, sopts);
            const GridField proj = project_to_wells(r.field, model.spec->a(), model.spec->b());
            row.offset = problem.offset;
            row.energy = r.report.total;
            row.perimeter = perimeter(proj, model.spec->a(), model.spec->b()).reconstructed;
            row.energy_per_length = row.energy / row.perimeter;
            row.iterations = r.iterations;
            row.converged = r.converged;
            return row;
        },
        [](const IsotropyRow &) {});
    if (!res.rows.empty()) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, mean = 0.0;
        for (const auto &r : res.rows) {
            lo = std::min(lo, r.energy_per_length);
            hi = std::max(hi, r.energy_per_length);
            mean += r.energy_per_length;
        }
        mean /= static_cast<double>(res.rows.size());
        res.spread = (hi - lo) / mean;
    }
    return res;
}

namespace {

bool decays(const std::vector<double> &v) {
    if (v.size() < 2) return false;
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return v.back() < v.front();
}

} // namespace

std::vector<ProbeSummary> probe_exponent(const ExperimentConfig &cfg, const Model &model, const std::vector<double> &alphas) {
    std::vector<ProbeSummary> out;
    for (double alpha : alphas) {
        ExperimentConfig c = cfg;
        c.schedule.alpha = alpha;
        c.schedule.validate(true);
        ProbeSummary s;
        s.alpha = alpha;
        s.rows = run_schedule(c, model, true);
        std::vector<double> d, gap;
        for (const auto &r : s.rows) {
            d.push_back(r.ok() ? r.discrepancy : std::numeric_limits<double>::quiet_NaN());
            gap.push_back(r.ok() ? std::abs(r.f_n - r.kh_times_perimeter) : std::numeric_limits<double>::quiet_NaN());
        }
        s.discrepancy_decays = decays(d);
        s.gap_decays = decays(gap);
        out.push_back(std::move(s));
    }
    return out;
}

OutputFormat parse_format(const std::string &name) {
    if (name == "csv") return OutputFormat::Csv;
    if (name == "json") return OutputFormat::Json;
    throw std::invalid_argument("unknown output format '" + name + "' (csv or json)");
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, end);
}

namespace {

std::string csv_quote(const std::string &s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

std::vector<std::string> csv_split(const std::string &line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string &s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("cannot parse number '" + s + "'");
    return v;
}

std::vector<std::string> row_values(const ExperimentRow &r) {
    return {std::to_string(r.n),
            format_double(r.eps),
            format_double(r.delta),
            format_double(r.eps_over_delta_3_2),
            format_double(r.f_n),
            format_double(r.f_h_n),
            format_double(r.discrepancy),
            format_double(r.discrepancy_interior),
            format_double(r.discrepancy_strip),
            format_double(r.poincare_bound),
            format_double(r.dirichlet_budget),
            format_double(r.perimeter),
            format_double(r.face_perimeter),
            format_double(r.kh_times_perimeter),
            format_double(r.l1_to_projection),
            std::to_string(r.cells),
            std::to_string(r.iterations),
            r.status,
            format_double(r.wall_time_s)};
}

void assign_field(ExperimentRow &r, const std::string &key, const std::string &v) {
    static const std::map<std::string, double ExperimentRow::*> doubles{
        {"eps", &ExperimentRow::eps},
        {"delta", &ExperimentRow::delta},
        {"eps_over_delta_3_2", &ExperimentRow::eps_over_delta_3_2},
        {"f_n", &ExperimentRow::f_n},
        {"f_h_n", &ExperimentRow::f_h_n},
        {"discrepancy", &ExperimentRow::discrepancy},
        {"discrepancy_interior", &ExperimentRow::discrepancy_interior},
        {"discrepancy_strip", &ExperimentRow::discrepancy_strip},
        {"poincare_bound", &ExperimentRow::poincare_bound},
        {"dirichlet_budget", &ExperimentRow::dirichlet_budget},
        {"perimeter", &ExperimentRow::perimeter},
        {"face_perimeter", &ExperimentRow::face_perimeter},
        {"kh_times_perimeter", &ExperimentRow::kh_times_perimeter},
        {"l1_to_projection", &ExperimentRow::l1_to_projection},
        {"wall_time_s", &ExperimentRow::wall_time_s}};
    if (key == "n") r.n = std::stoi(v);
    else if (key == "cells") r.cells = std::stoi(v);
    else if (key == "iterations") r.iterations = std::stoi(v);
    else if (key == "status") r.status = v;
    else if (auto it = doubles.find(key); it != doubles.end()) r.*(it->second) = parse_double(v);
    else throw std::invalid_argument("unknown column '" + key + "'");
}

} // namespace

std::string to_csv(const std::vector<ExperimentRow> &rows) {
    std::string out;
    const auto &cols = row_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
    out += '\n';
    for (const auto &r : rows) {
        const auto vals = row_values(r);
        for (std::size_t i = 0; i < vals.size(); ++i) out += (i ? "," : "") + csv_quote(vals[i]);
        out += '\n';
    }
    return out;
}

nlohmann::json to_json(const std::vector<ExperimentRow> &rows) {
    nlohmann::json arr = nlohmann::json::array();
    const auto &cols = row_columns();
    for (const auto &r : rows) {
        nlohmann::json o = nlohmann::json::object();
        const auto vals = row_values(r);
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (cols[i] == "status") o[cols[i]] = r.status;
            else if (cols[i] == "n" || cols[i] == "cells" || cols[i] == "iterations") o[cols[i]] = std::stoi(vals[i]);
            else o[cols[i]] = parse_double(vals[i]);
        }
        arr.push_back(std::move(o));
    }
    return arr;
}

std::vector<ExperimentRow> rows_from_csv(const std::string &text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) return {};
    const auto header = csv_split(line);
    std::vector<ExperimentRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto vals = csv_split(line);
        if (vals.size() != header.size()) throw std::invalid_argument("rows_from_csv: ragged line");
        ExperimentRow r;
        for (std::size_t i = 0; i < vals.size(); ++i) assign_field(r, header[i], vals[i]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ExperimentRow> rows_from_json(const nlohmann::json &j) {
    if (!j.is_array()) throw std::invalid_argument("rows_from_json: expected an array");
    std::vector<ExperimentRow> rows;
    for (const auto &o : j) {
        ExperimentRow r;
        for (const auto &[key, v] : o.items()) {
            if (v.is_string()) assign_field(r, key, v.get<std::string>());
            else if (v.is_number_integer()) assign_field(r, key, std::to_string(v.get<long long>()));
            else assign_field(r, key, format_double(v.get<double>()));
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void emit(const std::vector<ExperimentRow> &rows, OutputFormat format, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    if (format == OutputFormat::Csv) out << to_csv(rows);
    else out << to_json(rows).dump(2) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

} // namespace hetphase
