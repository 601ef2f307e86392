// slespec: command-line front end (spectrum tables, curve families, exact
// truncation certificates, slope fits and Monte Carlo validation).

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "slespec/cli.hpp"
#include "slespec/table_io.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace slespec;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;

struct Common {
    std::string out;
    std::string format;  // empty: csv for tables, json for reports
    std::uint64_t seed = 42;
    int order = 0;  // 0: subcommand default
    unsigned threads = 1;
};

json num(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

json num(const Number& n) {
    if (n.is_exact()) return to_string(*n.exact);
    return num(n.value);
}

std::string csv(const Number& n) { return n.is_exact() ? to_string(*n.exact) : to_string(n.value); }

json header(const char* command) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = command;
    return j;
}

void emit(const Common& c, const std::string& text) {
    if (c.out.empty() || c.out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    if (!f) throw UsageError("cannot open output file '" + c.out + "'");
    f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void require_json(const Common& c, const char* cmd) {
    if (c.format == "csv")
        throw UsageError(std::string(cmd) + " writes a JSON report; use --format json");
}

int cmd_spectrum(const Common& c, const std::string& q_grid, const std::string& k_grid) {
    const auto rows = run_spectrum(parse_grid(q_grid), parse_grid(k_grid), c.threads);
    if (c.format == "json") {
        json j = header("spectrum");
        j["rows"] = json::array();
        for (const auto& r : rows) {
            json row;
            row["q"] = num(r.q);
            row["kappa"] = num(r.kappa);
            row["gamma_minus"] = r.value.gamma_minus ? num(*r.value.gamma_minus) : json(nullptr);
            row["branch"] = std::string(to_string(r.value.branch));
            row["beta"] = num(r.value.beta);
            j["rows"].push_back(row);
        }
        emit(c, dump(j));
        return kExitOk;
    }
    std::ostringstream os;
    os << "q,kappa,gamma_minus,branch,beta\n";
    for (const auto& r : rows)
        os << csv(r.q) << ',' << csv(r.kappa) << ','
           << (r.value.gamma_minus ? to_string(*r.value.gamma_minus) : "") << ','
           << to_string(r.value.branch) << ',' << to_string(r.value.beta) << '\n';
    emit(c, os.str());
    return kExitOk;
}

int cmd_curves(const Common& c, int m_max, const std::string& g_grid, const std::string& locus) {
    std::vector<double> lk;
    for (const auto& n : parse_grid(locus)) lk.push_back(n.value);
    const auto rep = run_curves(m_max, parse_grid(g_grid), lk, c.threads);
    if (rep.skipped > 0) std::cerr << "skipped " << rep.skipped << " invalid curve points\n";
    if (c.format == "json") {
        json j = header("curves");
        j["curves"] = json::array();
        for (const auto& r : rep.rows)
            j["curves"].push_back({{"M", r.M}, {"gamma", num(r.gamma)}, {"q", num(r.q)},
                                   {"kappa", num(r.kappa)}, {"beta_tilde", num(r.beta_tilde)},
                                   {"beta", num(r.beta)}});
        j["locus"] = json::array();
        for (const auto& l : rep.locus) j["locus"].push_back({{"kappa", num(l.kappa)}, {"q", num(l.q)}});
        j["skipped"] = rep.skipped;
        emit(c, dump(j));
        return kExitOk;
    }
    std::ostringstream os;
    os << "M,gamma,q,kappa,beta_tilde,beta\n";
    for (const auto& r : rep.rows)
        os << r.M << ',' << csv(r.gamma) << ',' << csv(r.q) << ',' << csv(r.kappa) << ','
           << csv(r.beta_tilde) << ',' << csv(r.beta) << '\n';
    for (const auto& l : rep.locus) os << "Q," << to_string(l.kappa) << ',' << to_string(l.q) << '\n';
    emit(c, os.str());
    return kExitOk;
}

int cmd_truncate(const Common& c, int M, const std::string& gamma, const std::string& kappa,
                 const std::string& table_out) {
    require_json(c, "truncate");
    if (!is_exact_literal(gamma)) throw UsageError("--gamma must be an exact fraction p/q");
    std::optional<Rational> k;
    if (!kappa.empty()) {
        if (!is_exact_literal(kappa)) throw UsageError("--kappa must be an exact fraction p/q");
        k = parse_rational(kappa);
    }
    const auto rep = run_truncation_certificate(M, parse_rational(gamma), c.order > 0 ? c.order : 40, k);
    json j = header("truncate");
    j["M"] = rep.M;
    j["gamma"] = to_string(rep.gamma);
    j["N"] = rep.N;
    j["q"] = to_string(rep.q);
    j["kappa"] = to_string(rep.kappa);
    j["kappa_overridden"] = rep.kappa_overridden;
    j["band_check"] = rep.band_ok ? "pass" : "fail";
    j["max_nonzero_offset"] = rep.width ? json(*rep.width) : json(nullptr);
    j["A_minus_M"] = to_string(rep.A_minus_M);
    j["pass"] = rep.pass;
    emit(c, dump(j));
    if (!table_out.empty()) {
        std::ofstream f(table_out, std::ios::binary);
        if (!f) throw UsageError("cannot open table file '" + table_out + "'");
        write_table(f, rep.table);
    }
    return rep.pass ? kExitOk : kExitValidation;
}

int cmd_betafit(const Common& c, BetaFitConfig cfg, const std::string& root) {
    require_json(c, "betafit");
    if (root != "minus" && root != "plus") throw UsageError("--root must be minus or plus");
    cfg.plus_root = root == "plus";
    cfg.N = c.order > 0 ? c.order : 400;
    cfg.threads = c.threads;
    const auto rep = run_beta_fit(cfg);
    json j = header("betafit");
    j["q"] = num(cfg.q);
    j["kappa"] = num(cfg.kappa);
    j["N"] = cfg.N;
    j["root"] = root;
    j["gamma"] = num(rep.gamma);
    j["n_phi"] = cfg.n_phi;
    j["tail_tol"] = num(cfg.tail_tol);
    j["slope"] = num(rep.fit.slope);
    j["intercept"] = num(rep.fit.intercept);
    j["residual"] = num(rep.fit.residual);
    j["beta_closed"] = num(rep.closed.beta);
    j["branch"] = std::string(to_string(rep.closed.branch));
    j["relative_deviation"] = num(rep.relative_deviation);
    j["slope_error_estimate"] = num(rep.slope_error_estimate);
    j["max_admissible_r"] = num(rep.max_admissible_r);
    j["samples"] = json::array();
    for (const auto& s : rep.samples)
        j["samples"].push_back({{"k", s.k}, {"r", num(s.r)}, {"integral", num(s.integral)},
                                {"tail", num(s.tail)}, {"remainder", num(s.remainder)}});
    emit(c, dump(j));
    return kExitOk;
}

double parse_value(const char* flag, const std::string& s) {
    try {
        return parse_real(s);
    } catch (const Error& e) {
        throw UsageError(std::string(flag) + ": " + e.what());
    }
}

std::complex<double> parse_point(const std::string& s) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) return {parse_real(s), 0};
    return {parse_real(s.substr(0, comma)), parse_real(s.substr(comma + 1))};
}

int cmd_mc(const Common& c, MCConfig cfg, const std::string& w, const std::string& dump_path) {
    require_json(c, "mc");
    try {
        cfg.w = parse_point(w);
    } catch (const Error& e) {
        throw UsageError(std::string("--w: ") + e.what());
    }
    cfg.seed = c.seed;
    cfg.threads = c.threads;
    std::ofstream dump_file;
    if (!dump_path.empty()) {
        dump_file.open(dump_path, std::ios::binary);
        if (!dump_file) throw UsageError("cannot open dump file '" + dump_path + "'");
    }
    const auto rep = run_mc_validate(cfg, c.order > 0 ? c.order : 200, dump_path.empty() ? nullptr : &dump_file);
    json j = header("mc");
    j["q"] = num(cfg.q);
    j["kappa"] = num(cfg.kappa);
    j["w"] = {num(cfg.w.real()), num(cfg.w.imag())};
    j["T"] = num(cfg.T);
    j["n_steps"] = cfg.n_steps;
    j["n_samples"] = rep.estimate.n_samples;
    j["seed"] = rep.estimate.seed;
    j["mean"] = num(rep.estimate.mean);
    j["stderr"] = num(rep.estimate.std_error);
    j["oracle"] = rep.oracle ? num(*rep.oracle) : json(nullptr);
    j["oracle_method"] = rep.oracle_method;
    j["z_score"] = rep.z_score ? num(*rep.z_score) : json(nullptr);
    j["pass"] = rep.pass;
    j["warnings"] = rep.estimate.warnings;
    emit(c, dump(j));
    return rep.pass ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Integral-means spectrum of interior whole-plane SLE"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--out", common.out, "Output file (default stdout)");
    app.add_option("--format", common.format, "Output format (csv for tables, json for reports)")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--seed", common.seed, "Random seed");
    app.add_option("--order", common.order, "Table order N")->check(CLI::PositiveNumber);
    app.add_option("--threads", common.threads, "Worker threads (0 = all cores)");

    std::string q_grid, k_grid;
    auto* spectrum = app.add_subcommand("spectrum", "beta(q, kappa) over a grid");
    spectrum->add_option("--q", q_grid, "q grid: a,b,c or lo:hi:n")->required();
    spectrum->add_option("--kappa", k_grid, "kappa grid")->required();

    int m_max = 3;
    std::string g_grid, locus = "0:12:49";
    auto* curves = app.add_subcommand("curves", "Band-truncation curve families");
    curves->add_option("--M-max", m_max, "Largest band half-width")->check(CLI::NonNegativeNumber);
    curves->add_option("--gamma", g_grid, "gamma grid")->required();
    curves->add_option("--locus-kappa", locus, "kappa grid for the transition locus");

    int M = 0;
    std::string t_gamma, t_kappa, table_out;
    auto* truncate = app.add_subcommand("truncate", "Exact band-truncation certificate");
    truncate->add_option("--M", M, "Band half-width")->required()->check(CLI::NonNegativeNumber);
    truncate->add_option("--gamma", t_gamma, "Curve parameter p/q")->required();
    truncate->add_option("--kappa", t_kappa, "Override kappa (negative control)");
    truncate->add_option("--table-out", table_out, "Write the rational table here");

    BetaFitConfig fit;
    std::string root = "minus";
    auto* betafit = app.add_subcommand("betafit", "Integral-means slope fit");
    std::string fit_q, fit_k;
    betafit->add_option("--q", fit_q, "q (decimal or p/q)")->required();
    betafit->add_option("--kappa", fit_k, "kappa (decimal or p/q)")->required();
    betafit->add_option("--k-min", fit.k_min, "Smallest k in r = 1 - 2^-k");
    betafit->add_option("--k-max", fit.k_max, "Largest k");
    betafit->add_option("--n-phi", fit.n_phi, "Quadrature nodes (power of two)");
    betafit->add_option("--tail-tol", fit.tail_tol, "Relative series tail tolerance");
    betafit->add_option("--root", root, "gamma root: minus or plus");

    MCConfig mc;
    std::string w = "0.5", dump_path;
    auto* mcc = app.add_subcommand("mc", "Monte Carlo validation of rho(w, conj w)");
    std::string mc_q, mc_k;
    mcc->add_option("--q", mc_q, "q (decimal or p/q)")->required();
    mcc->add_option("--kappa", mc_k, "kappa (decimal or p/q)")->required();
    mcc->add_option("--w", w, "Evaluation point re or re,im");
    mcc->add_option("--samples", mc.n_samples, "Number of paths");
    mcc->add_option("--T", mc.T, "Time horizon");
    mcc->add_option("--steps", mc.n_steps, "Time steps");
    mcc->add_option("--dump", dump_path, "Raw per-path dump file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*spectrum) return cmd_spectrum(common, q_grid, k_grid);
        if (*curves) return cmd_curves(common, m_max, g_grid, locus);
        if (*truncate) return cmd_truncate(common, M, t_gamma, t_kappa, table_out);
        if (*betafit) {
            fit.q = parse_value("--q", fit_q);
            fit.kappa = parse_value("--kappa", fit_k);
            return cmd_betafit(common, fit, root);
        }
        if (*mcc) {
            mc.q = parse_value("--q", mc_q);
            mc.kappa = parse_value("--kappa", mc_k);
            return cmd_mc(common, mc, w, dump_path);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidParameter& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NoRealGamma& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
        return kExitUsage;
    } catch (const TailCheckFailed& e) {
        std::cerr << "validation failed: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitUsage;
}
