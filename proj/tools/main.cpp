// fpb: analyzer and Monte Carlo simulator for the optimized entangling-probe
// attack on BB84. Subcommands:
//   curves      analytic attack curves over an error-rate grid
//   simulate    Monte Carlo key exchange session with an optional probe
//   povm-check  validate the discriminator and its optical realization
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fpb/povm.hpp"
#include "fpb/probe.hpp"
#include "fpb/sim.hpp"
#include "json.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr double kCheckTolAlgebra = 1e-12;
constexpr double kCheckTolOperator = 1e-10;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// All numeric text output uses 12 significant digits, locale independent.
std::string format_num(double x) {
    std::array<char, 32> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x,
                             std::chars_format::general, 12);
    return std::string(buf.data(), res.ptr);
}

// Locale-independent decimal parse.
double parse_double(const std::string& text) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end)
        throw std::invalid_argument("invalid number: " + text);
    return value;
}

// Round to the 12-digit text representation so JSON numbers carry exactly the
// documented precision and serialize reproducibly.
double round_num(double x) { return parse_double(format_num(x)); }

nlohmann::json json_opt(const std::optional<double>& v) {
    if (!v) return nullptr;
    return round_num(*v);
}

// Rates accept plain decimals or exact fractions like 1/3.
double parse_rate(const std::string& text) {
    try {
        const auto slash = text.find('/');
        if (slash == std::string::npos) return parse_double(text);
        const double num = parse_double(text.substr(0, slash));
        const double den = parse_double(text.substr(slash + 1));
        if (den == 0.0) throw std::invalid_argument("zero denominator");
        return num / den;
    } catch (const std::exception&) {
        throw CLI::ValidationError("invalid rate value: " + text);
    }
}

void write_text(const std::string& path, const std::string& payload) {
    if (path.empty()) {
        std::cout << payload;
        if (!std::cout) throw IoError("failed to write to stdout");
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + path);
    out << payload;
    out.flush();
    if (!out) throw IoError("failed to write output file: " + path);
}

// ---------------------------------------------------------------------------
// curves

struct CurveRow {
    double e, q, r_inconclusive, r1, p_eve_correct, renyi_bits;
};

CurveRow curve_row(double e) {
    CurveRow row;
    row.e = e;
    row.q = fpb::overlap_q(e);
    row.r_inconclusive = row.q;
    row.r1 = fpb::beamsplitter_reflectance(row.q);
    row.p_eve_correct = fpb::eve_correct_prob_projective(e);
    row.renyi_bits = fpb::renyi_info(e);
    return row;
}

// Every emitted row must satisfy the closed-form cross identities; a failure
// here is an internal inconsistency, not a user error.
void self_validate(const CurveRow& row) {
    const double round_trip = fpb::error_rate_from_inconclusive(row.r_inconclusive);
    if (std::abs(round_trip - row.e) > kCheckTolAlgebra)
        throw std::logic_error("curve self-validation: E/R round trip failed");
    const double r1_trig = std::pow(std::tan(0.5 * std::acos(row.q)), 2);
    if (std::abs(row.r1 - r1_trig) > kCheckTolAlgebra)
        throw std::logic_error("curve self-validation: reflectance forms disagree");
    const double p = row.p_eve_correct;
    const double renyi_from_p = std::log2(2.0 * (p * p + (1.0 - p) * (1.0 - p)));
    if (std::abs(renyi_from_p - row.renyi_bits) > kCheckTolAlgebra)
        throw std::logic_error("curve self-validation: information forms disagree");
}

int cmd_curves(double e_min, double e_max, unsigned steps, const std::string& format,
               const std::string& out_path) {
    if (steps == 0) throw CLI::ValidationError("steps must be positive");
    if (e_min > e_max) throw CLI::ValidationError("e-min must not exceed e-max");
    if (steps == 1 && e_min != e_max)
        throw CLI::ValidationError("steps = 1 requires e-min == e-max");

    std::vector<CurveRow> rows;
    rows.reserve(steps);
    for (unsigned i = 0; i < steps; ++i) {
        double e = e_min;
        if (steps > 1) {
            // Pin the endpoints exactly; interpolate in between.
            if (i == steps - 1)
                e = e_max;
            else
                e = ((steps - 1 - i) * e_min + i * e_max) / (steps - 1);
        }
        rows.push_back(curve_row(e));  // throws std::domain_error off-range
        self_validate(rows.back());
    }

    std::string payload;
    if (format == "csv") {
        std::ostringstream os;
        os << "E,Q,R_inconclusive,R1,p_eve_correct,renyi_bits\n";
        for (const auto& r : rows)
            os << format_num(r.e) << ',' << format_num(r.q) << ','
               << format_num(r.r_inconclusive) << ',' << format_num(r.r1) << ','
               << format_num(r.p_eve_correct) << ',' << format_num(r.renyi_bits) << '\n';
        payload = os.str();
    } else {
        nlohmann::json doc;
        doc["version"] = kVersion;
        doc["config"] = {{"e_min", round_num(e_min)},
                         {"e_max", round_num(e_max)},
                         {"steps", steps},
                         {"format", format}};
        doc["seed"] = nullptr;
        auto& results = doc["results"] = nlohmann::json::array();
        for (const auto& r : rows)
            results.push_back({{"E", round_num(r.e)},
                               {"Q", round_num(r.q)},
                               {"R_inconclusive", round_num(r.r_inconclusive)},
                               {"R1", round_num(r.r1)},
                               {"p_eve_correct", round_num(r.p_eve_correct)},
                               {"renyi_bits", round_num(r.renyi_bits)}});
        payload = doc.dump(2) + "\n";
    }
    write_text(out_path, payload);
    return 0;
}

// ---------------------------------------------------------------------------
// simulate

const char* mode_name(fpb::EveMode m) {
    switch (m) {
        case fpb::EveMode::None: return "none";
        case fpb::EveMode::Projective: return "projective";
        case fpb::EveMode::Povm: return "povm";
    }
    return "none";
}

nlohmann::json config_json(const fpb::SessionConfig& cfg) {
    nlohmann::json j;
    j["pulses"] = cfg.n_pulses;
    j["mode"] = mode_name(cfg.eve_mode);
    if (cfg.eve_mode != fpb::EveMode::None) {
        const double e = cfg.resolved_error_rate();
        j["error_rate"] = round_num(e);
        j["inconclusive_rate"] = round_num(fpb::overlap_q(e));
    } else {
        j["error_rate"] = nullptr;
        j["inconclusive_rate"] = nullptr;
    }
    j["loss"] = round_num(cfg.channel_loss);
    j["selective_relay"] = cfg.selective_relay;
    j["shards"] = cfg.shards;
    return j;
}

int cmd_simulate(const fpb::SessionConfig& cfg, const std::string& format,
                 const std::string& out_path, const std::string& log_path) {
    const fpb::SessionResult result = fpb::run_session(cfg);
    const fpb::SessionStats& st = result.stats;

    std::string payload;
    if (format == "csv") {
        std::ostringstream os;
        os << "sent,received,sifted,sifted_errors,qber,eve_accuracy,"
              "eve_accuracy_expected,eve_conclusive_fraction,effective_transmission,"
              "renyi_info_analytic\n";
        const auto opt = [&](const std::optional<double>& v) {
            return v ? format_num(*v) : std::string();
        };
        os << st.sent << ',' << st.received << ',' << st.sifted << ',' << st.sifted_errors
           << ',' << opt(st.qber) << ',' << opt(st.eve_accuracy) << ','
           << opt(st.eve_accuracy_expected) << ',' << opt(st.eve_conclusive_fraction) << ','
           << format_num(st.effective_transmission) << ',' << opt(st.renyi_info_analytic)
           << '\n';
        payload = os.str();
    } else {
        nlohmann::json doc;
        doc["version"] = kVersion;
        doc["config"] = config_json(cfg);
        doc["seed"] = cfg.seed;
        doc["results"] = {{"sent", st.sent},
                          {"received", st.received},
                          {"sifted", st.sifted},
                          {"sifted_errors", st.sifted_errors},
                          {"qber", json_opt(st.qber)},
                          {"eve_accuracy", json_opt(st.eve_accuracy)},
                          {"eve_accuracy_expected", json_opt(st.eve_accuracy_expected)},
                          {"eve_conclusive_fraction", json_opt(st.eve_conclusive_fraction)},
                          {"effective_transmission", round_num(st.effective_transmission)},
                          {"renyi_info_analytic", json_opt(st.renyi_info_analytic)}};
        payload = doc.dump(2) + "\n";
    }
    write_text(out_path, payload);

    if (!log_path.empty()) {
        std::ostringstream os;
        fpb::write_pulse_log(os, result.log);
        write_text(log_path, os.str());
    }
    return 0;
}

// ---------------------------------------------------------------------------
// povm-check

struct CheckLine {
    std::string label;
    double value;
    double bound;
    bool ok;
};

int cmd_povm_check(double error_rate) {
    const fpb::ProbeTuning tuning = fpb::tuning_from_error_rate(error_rate);
    const fpb::UsdPovm povm = fpb::build_usd_povm(tuning.error_rate);
    const auto effects = povm.effects();

    std::vector<CheckLine> checks;
    const auto residual_check = [&](std::string label, double value, double bound) {
        checks.push_back({std::move(label), value, bound, std::abs(value) <= bound});
    };

    fpb::Operator2 sum;
    for (const auto& e : effects) sum = sum + e;
    const fpb::Operator2 dev = sum - fpb::Operator2::identity();
    double completeness = 0.0;
    for (const auto& c : dev.m) completeness = std::max(completeness, std::abs(c));
    residual_check("completeness_residual", completeness, kCheckTolOperator);

    double min_eig = 0.0;
    for (const auto& e : effects) min_eig = std::min(min_eig, fpb::min_eigenvalue(e));
    checks.push_back({"min_eigenvalue", min_eig, kCheckTolOperator,
                      min_eig >= -kCheckTolOperator});

    const bool degenerate = tuning.overlap_q >= 1.0;
    const fpb::SigmaStates sigma = fpb::sigma_states(tuning.error_rate);
    const fpb::StateVec2 hat_plus = sigma.sigma_plus.unit();
    const fpb::StateVec2 hat_minus = sigma.sigma_minus.unit();
    const auto expect_prob = [](const fpb::StateVec2& s, const fpb::Operator2& m) {
        return s.inner(fpb::apply_operator(m, s)).real();
    };

    residual_check("misidentify_plus_as_minus", expect_prob(hat_plus, povm.pi_minus),
                   kCheckTolAlgebra);
    residual_check("misidentify_minus_as_plus", expect_prob(hat_minus, povm.pi_plus),
                   kCheckTolAlgebra);
    residual_check("inconclusive_rate_deviation",
                   expect_prob(hat_plus, povm.pi_inconclusive) - tuning.inconclusive_rate,
                   kCheckTolAlgebra);
    residual_check("conclusive_rate_deviation",
                   expect_prob(hat_plus, povm.pi_plus) - tuning.conclusive_rate,
                   kCheckTolAlgebra);
    const double r1_trig = std::pow(std::tan(0.5 * std::acos(tuning.overlap_q)), 2);
    residual_check("reflectance_forms_deviation", tuning.reflectance_r1 - r1_trig,
                   kCheckTolAlgebra);

    std::ostringstream os;
    os << "operating point:\n";
    os << "  E                = " << format_num(tuning.error_rate) << '\n';
    os << "  Q                = " << format_num(tuning.overlap_q) << '\n';
    os << "  R_inconclusive   = " << format_num(tuning.inconclusive_rate) << '\n';
    os << "  R_conclusive     = " << format_num(tuning.conclusive_rate) << '\n';
    os << "  R1               = " << format_num(tuning.reflectance_r1) << '\n';
    os << "  target_a2        = (" << format_num(tuning.target_a2.a[0].real()) << ", "
       << format_num(tuning.target_a2.a[1].real()) << ")\n";
    os << "  target_a1        = (" << format_num(tuning.target_a1.a[0].real()) << ", "
       << format_num(tuning.target_a1.a[1].real()) << ")\n";
    if (degenerate) {
        os << "  separator        = undefined (probe states coincide at E = 0)\n";
    } else {
        const fpb::SeparatorStates sep = fpb::separator_states(tuning.error_rate);
        os << "  separator_sum    = (" << format_num(sep.sum.a[0].real()) << ", "
           << format_num(sep.sum.a[1].real()) << ")\n";
        os << "  separator_diff   = (" << format_num(sep.diff.a[0].real()) << ", "
           << format_num(sep.diff.a[1].real()) << ")\n";
    }

    bool all_ok = true;
    os << "checks:\n";
    for (const auto& c : checks) {
        all_ok = all_ok && c.ok;
        os << "  [" << (c.ok ? "pass" : "FAIL") << "] " << c.label << " = "
           << format_num(c.value) << " (bound " << format_num(c.bound) << ")\n";
    }
    os << (all_ok ? "result: pass\n" : "result: FAIL\n");

    std::cout << os.str();
    if (!std::cout) throw IoError("failed to write to stdout");
    return all_ok ? 0 : 1;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Applies line-based `key=value` defaults from a file to the invoked
// subcommand. Keys name long options without the leading dashes; values for
// options given explicitly on the command line are left alone, and a key whose
// mutually exclusive partner was given explicitly is skipped as overridden.
void apply_config_defaults(CLI::App& sub, const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);

    std::set<const CLI::Option*> injected;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        const auto eq = text.find('=');
        const std::string key =
            eq == std::string::npos ? std::string() : trim(text.substr(0, eq));
        if (key.empty() || key == "config")
            throw CLI::ValidationError(
                "--config", "expected key=value on line " + std::to_string(lineno));
        auto* opt = sub.get_option_no_throw("--" + key);
        if (opt == nullptr)
            throw CLI::ValidationError(
                "--config", "unknown key '" + key + "' on line " + std::to_string(lineno));
        if (opt->count() > 0) continue;
        bool overridden = false;
        for (const auto* other : opt->get_excludes())
            overridden = overridden || (other->count() > 0 && injected.count(other) == 0);
        if (overridden) continue;
        opt->add_result(trim(text.substr(eq + 1)));
        opt->run_callback();
        injected.insert(opt);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entangling-probe attack analyzer and BB84 session simulator"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // curves ----------------------------------------------------------------
    auto* curves = app.add_subcommand("curves", "Tabulate attack curves over an E grid");
    std::string c_emin = "0", c_emax = "1/3";
    unsigned c_steps = 11;
    std::string c_format = "csv", c_out;
    curves->add_option("e_min", c_emin, "Grid start (decimal or fraction)")
        ->capture_default_str();
    curves->add_option("e_max", c_emax, "Grid end (decimal or fraction)")
        ->capture_default_str();
    curves->add_option("steps", c_steps, "Number of grid rows")->capture_default_str();
    curves->add_option("--format", c_format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    curves->add_option("--out", c_out, "Output path (default stdout)");
    std::string c_config;
    curves->add_option("--config", c_config, "Read key=value defaults from a file");

    // simulate ----------------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo BB84 session");
    std::uint64_t s_pulses = 0;
    std::string s_mode = "none";
    std::string s_error_rate, s_inconclusive_rate;
    std::string s_loss = "0";
    bool s_selective = false;
    std::uint64_t s_seed = 0;
    std::uint32_t s_shards = 1;
    std::string s_format = "json", s_out, s_log;
    sim->add_option("--pulses", s_pulses, "Number of pulses Alice sends");
    sim->add_option("--mode", s_mode, "Eavesdropper mode")
        ->check(CLI::IsMember({"none", "projective", "povm"}))
        ->capture_default_str();
    auto* opt_e = sim->add_option("--error-rate", s_error_rate,
                                  "Induced error rate E in [0, 1/3]");
    auto* opt_r = sim->add_option("--inconclusive-rate", s_inconclusive_rate,
                                  "Inconclusive rate in [0, 1]");
    opt_e->excludes(opt_r);
    sim->add_option("--loss", s_loss, "Channel erasure probability")->capture_default_str();
    sim->add_flag("--selective-relay", s_selective,
                  "Forward only conclusively identified pulses (povm mode)");
    sim->add_option("--seed", s_seed, "Random stream seed")->capture_default_str();
    sim->add_option("--shards", s_shards, "Number of deterministic sub-streams")
        ->capture_default_str();
    sim->add_option("--format", s_format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sim->add_option("--out", s_out, "Output path (default stdout)");
    sim->add_option("--log", s_log, "Write the per-pulse CSV log to this path");
    std::string s_config;
    sim->add_option("--config", s_config, "Read key=value defaults from a file");

    // povm-check --------------------------------------------------------------
    auto* check = app.add_subcommand("povm-check",
                                     "Validate the discriminator at one operating point");
    std::string k_error_rate, k_inconclusive_rate;
    auto* kopt_e = check->add_option("--error-rate", k_error_rate,
                                     "Induced error rate E in [0, 1/3]");
    auto* kopt_r = check->add_option("--inconclusive-rate", k_inconclusive_rate,
                                     "Inconclusive rate in [0, 1]");
    kopt_e->excludes(kopt_r);
    std::string k_config;
    check->add_option("--config", k_config, "Read key=value defaults from a file");

    try {
        app.parse(argc, argv);

        if (curves->parsed()) {
            apply_config_defaults(*curves, c_config);
            return cmd_curves(parse_rate(c_emin), parse_rate(c_emax), c_steps, c_format,
                              c_out);
        }

        if (sim->parsed()) {
            apply_config_defaults(*sim, s_config);
            fpb::SessionConfig cfg;
            cfg.n_pulses = s_pulses;
            if (s_mode == "projective") cfg.eve_mode = fpb::EveMode::Projective;
            else if (s_mode == "povm") cfg.eve_mode = fpb::EveMode::Povm;
            if (!s_error_rate.empty()) cfg.error_rate = parse_rate(s_error_rate);
            if (!s_inconclusive_rate.empty())
                cfg.inconclusive_rate = parse_rate(s_inconclusive_rate);
            cfg.channel_loss = parse_rate(s_loss);
            cfg.selective_relay = s_selective;
            cfg.seed = s_seed;
            cfg.shards = s_shards;
            cfg.keep_pulse_log = !s_log.empty();
            cfg.validate();
            return cmd_simulate(cfg, s_format, s_out, s_log);
        }

        if (check->parsed()) {
            apply_config_defaults(*check, k_config);
            if (k_error_rate.empty() == k_inconclusive_rate.empty())
                throw CLI::ValidationError(
                    "exactly one of --error-rate / --inconclusive-rate is required");
            const double e = !k_error_rate.empty()
                                 ? parse_rate(k_error_rate)
                                 : fpb::error_rate_from_inconclusive(
                                       parse_rate(k_inconclusive_rate));
            return cmd_povm_check(e);
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
