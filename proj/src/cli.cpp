#include "permclass/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "permclass/analyzer.hpp"
#include "permclass/errors.hpp"
#include "permclass/sampler.hpp"
#include "permclass/series.hpp"
#include "permclass/stats.hpp"
#include "permclass/tree.hpp"

namespace permclass {

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int family_index(const TreeSpec& spec, const std::string& name) {
    if (name.empty()) return 0;
    const int i = spec.index_of(name);
    if (i < 0) throw validation_error("unknown family: " + name);
    return i;
}

nlohmann::json finite_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json();
}

nlohmann::json report_json(const AnalysisReport& rep) {
    nlohmann::json j;
    j["target"] = rep.family_names[rep.target];

    nlohmann::json jr;
    jr["rho"] = rep.radius.rho;
    jr["tolerance"] = rep.radius.tol;
    jr["families"] = nlohmann::json::object();
    for (size_t i = 0; i < rep.family_names.size(); ++i)
        jr["families"][rep.family_names[i]] = finite_or_null(rep.radius.family_radius[i]);
    j["radius"] = std::move(jr);

    nlohmann::json jc;
    jc["families"] = nlohmann::json::array();
    for (int i : rep.critical.critical) jc["families"].push_back(rep.family_names[i]);
    jc["components"] = nlohmann::json::array();
    for (const auto& comp : rep.critical.critical_sccs) {
        nlohmann::json names = nlohmann::json::array();
        for (int i : comp) names.push_back(rep.family_names[i]);
        jc["components"].push_back(std::move(names));
    }
    jc["strongly_connected"] = rep.critical.strongly_connected;
    jc["branching"] = rep.critical.branching;
    jc["ambiguous"] = rep.critical.ambiguous;
    j["critical"] = std::move(jc);

    j["descriptor"] = nlohmann::json::parse(descriptor_to_json(rep.descriptor));

    nlohmann::json jk;
    switch (rep.constants.kind) {
        case AsymptoticConstants::Kind::None: jk["kind"] = "none"; break;
        case AsymptoticConstants::Kind::Polar: jk["kind"] = "polar"; break;
        case AsymptoticConstants::Kind::Sqrt: jk["kind"] = "sqrt"; break;
        case AsymptoticConstants::Kind::DoublePole: jk["kind"] = "double_pole"; break;
    }
    jk["rho"] = rep.constants.rho;
    jk["coefficients"] = nlohmann::json::object();
    for (size_t i = 0; i < rep.family_names.size(); ++i)
        if (i < rep.constants.coef.size() && std::isfinite(rep.constants.coef[i]))
            jk["coefficients"][rep.family_names[i]] = rep.constants.coef[i];
    j["constants"] = std::move(jk);

    switch (rep.periodicity.verdict) {
        case Periodicity::Aperiodic: j["periodicity"] = {{"verdict", "aperiodic"}}; break;
        case Periodicity::PossiblyPeriodic:
            j["periodicity"] = {{"verdict", "possibly_periodic"}, {"period", rep.periodicity.period}};
            break;
        case Periodicity::Inconclusive: j["periodicity"] = {{"verdict", "inconclusive"}}; break;
    }

    if (rep.spectral) j["spectral"] = {{"eigenvalue", rep.spectral->eigenvalue}};
    if (rep.linear) {
        j["linear"] = {{"p",
                        {rep.linear->p.plus_left, rep.linear->p.plus_right, rep.linear->p.minus_left,
                         rep.linear->p.minus_right}},
                       {"denominator", rep.linear->denominator}};
    }
    if (rep.branching) {
        j["branching"] = {{"p_plus", rep.branching->p_plus},
                          {"Z", rep.branching->Z},
                          {"zeta", rep.branching->zeta},
                          {"beta", rep.branching->beta}};
    }
    j["notes"] = rep.notes;
    return j;
}

XQuadruple parse_corners(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            size_t used = 0;
            vals.push_back(std::stod(item, &used));
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw parse_error("bad corner weight: " + item);
        }
    }
    if (vals.size() != 4) throw parse_error("corner weights need exactly four entries");
    return {vals[0], vals[1], vals[2], vals[3]};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"analyze tree-specifications of permutation classes"};
    app.name("permclass");
    int threads = 1;
    app.add_option("--threads", threads, "worker threads (execution stays serial for determinism)")
        ->check(CLI::PositiveNumber);

    std::string spec_path, family;
    auto add_spec = [&](CLI::App* sub) {
        sub->add_option("--spec", spec_path, "specification file (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--family", family, "target family (default: the first one)");
    };

    CLI::App* s_analyze = app.add_subcommand("analyze", "locate the singularity and resolve the limit");
    add_spec(s_analyze);

    CLI::App* s_expand = app.add_subcommand("expand", "exact series coefficients as CSV");
    add_spec(s_expand);
    int order = 0;
    s_expand->add_option("-n,--order", order, "highest coefficient order")
        ->required()
        ->check(CLI::Range(1, 100000));
    bool all_families = false;
    s_expand->add_flag("--all", all_families, "emit every family, not just the target");

    CLI::App* s_sample = app.add_subcommand("sample", "Boltzmann-sample trees near a size");
    add_spec(s_sample);
    int size_n = 0, count = 1;
    std::uint64_t seed = 0;
    double window = 0.1;
    long budget = 1'000'000;
    bool as_trees = false;
    s_sample->add_option("-n,--size", size_n, "target size")->required()->check(CLI::Range(1, 100000000));
    s_sample->add_option("--count", count, "number of samples")->check(CLI::PositiveNumber);
    s_sample->add_option("--seed", seed, "random seed")->required();
    s_sample->add_option("--window", window, "relative size window");
    s_sample->add_option("--budget", budget, "attempts before giving up")->check(CLI::PositiveNumber);
    s_sample->add_flag("--trees", as_trees, "print trees instead of permutations");

    CLI::App* s_verify = app.add_subcommand("verify", "compare sampled patterns with the predicted limit");
    add_spec(s_verify);
    int v_n = 1000, v_count = 300, v_k = 3, v_draws = 200;
    double threshold = 0.05;
    std::uint64_t v_seed = 0;
    s_verify->add_option("-n,--size", v_n, "sample size")->check(CLI::Range(1, 100000000));
    s_verify->add_option("--count", v_count, "permutations to sample")->check(CLI::PositiveNumber);
    s_verify->add_option("-k,--pattern-size", v_k, "pattern size")->check(CLI::Range(1, 8));
    s_verify->add_option("--draws", v_draws, "pattern draws per permutation")->check(CLI::PositiveNumber);
    s_verify->add_option("--threshold", threshold, "total variation acceptance threshold");
    s_verify->add_option("--seed", v_seed, "random seed")->required();

    CLI::App* s_decompose = app.add_subcommand("decompose", "standard tree of a permutation");
    std::string perm_text;
    s_decompose->add_option("permutation", perm_text, "one-line notation")->required();

    CLI::App* s_permuton = app.add_subcommand("permuton-sample", "draw points from an X permuton");
    std::string corners_text, descriptor_path;
    int points = 0;
    std::uint64_t p_seed = 0;
    auto* opt_corners =
        s_permuton->add_option("--corners", corners_text, "four corner weights, comma separated");
    auto* opt_desc = s_permuton->add_option("--descriptor", descriptor_path, "descriptor file (JSON)")
                         ->check(CLI::ExistingFile);
    opt_corners->excludes(opt_desc);
    s_permuton->add_option("-n,--points", points, "number of points")
        ->required()
        ->check(CLI::Range(1, 100000000));
    s_permuton->add_option("--seed", p_seed, "random seed")->required();

    app.require_subcommand(1);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(s_analyze)) {
            const TreeSpec spec = TreeSpec::from_json_text(slurp(spec_path));
            const AnalysisReport rep = analyze(spec, family_index(spec, family));
            out << report_json(rep).dump(2) << "\n";
        } else if (app.got_subcommand(s_expand)) {
            const TreeSpec spec = TreeSpec::from_json_text(slurp(spec_path));
            const int target = family_index(spec, family);
            const auto series = expand(spec, order);
            out << "n,family,coefficient\n";
            for (int n = 1; n <= order; ++n) {
                for (int f = 0; f < spec.size(); ++f) {
                    if (!all_families && f != target) continue;
                    out << n << "," << spec.family(f).name << "," << series[f].at(n).str() << "\n";
                }
            }
        } else if (app.got_subcommand(s_sample)) {
            const TreeSpec spec = TreeSpec::from_json_text(slurp(spec_path));
            const int target = family_index(spec, family);
            const BoltzmannControl ctl = tune_control(spec, target, size_n);
            SampleOptions opts;
            opts.window = window;
            opts.budget = budget;
            Rng rng(seed);
            for (int i = 0; i < count; ++i) {
                const Tree t = boltzmann_sample(spec, target, ctl, size_n, rng, opts);
                out << (as_trees ? format_tree(t) : format_permutation(perm_of(t))) << "\n";
            }
        } else if (app.got_subcommand(s_verify)) {
            const TreeSpec spec = TreeSpec::from_json_text(slurp(spec_path));
            const int target = family_index(spec, family);
            const VerificationReport vr =
                verify_sampler(spec, target, v_n, v_count, v_k, v_draws, threshold, v_seed);
            nlohmann::json j;
            j["target"] = spec.family(target).name;
            j["k"] = vr.k;
            j["sampled"] = vr.sampled;
            j["pattern_draws"] = vr.pattern_draws;
            j["exact_reference"] = vr.exact_reference;
            j["total_variation"] = vr.tv;
            j["threshold"] = vr.threshold;
            j["pass"] = vr.pass;
            j["descriptor"] = nlohmann::json::parse(descriptor_to_json(vr.descriptor));
            out << j.dump(2) << "\n";
            return vr.pass ? 0 : 1;
        } else if (app.got_subcommand(s_decompose)) {
            out << format_tree(decompose(parse_permutation(perm_text))) << "\n";
        } else if (app.got_subcommand(s_permuton)) {
            XQuadruple q;
            if (!corners_text.empty()) {
                q = parse_corners(corners_text);
            } else if (!descriptor_path.empty()) {
                const LimitDescriptor d = descriptor_from_json(slurp(descriptor_path));
                if (d.kind != LimitDescriptor::Kind::X)
                    throw validation_error("only x-type descriptors define a point sampler");
                q = d.x;
            } else {
                throw usage_error("permuton-sample needs --corners or --descriptor");
            }
            Rng rng(p_seed);
            const auto pts = sample_x_permuton(q, points, rng);
            out << "x,y\n" << std::setprecision(17);
            for (const auto& p : pts) out << p.x << "," << p.y << "\n";
        }
        return 0;
    } catch (const Error& e) {
        if (e.code() == "UsageError") {
            err << e.what() << "\n";
            return 2;
        }
        nlohmann::json j;
        j["error"] = {{"code", e.code()}, {"message", e.what()}};
        err << j.dump(2) << "\n";
        return 1;
    }
}

}  // namespace permclass
