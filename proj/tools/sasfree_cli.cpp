#include <sasfree/sasfree.hpp>

#include <CLI11.hpp>

#include <iostream>

using namespace sasfree;

namespace {

enum Exit { kPass = 0, kTolerance = 1, kUsage = 2, kResource = 3 };

struct ModelFlags {
    std::string kind = "boundary";
    int d = 2;
    double alpha = 1.0;
    double theta = 3.0;
    std::string f_table;

    void attach(CLI::App* app, bool with_kind = true)
    {
        if (with_kind)
            app->add_option("--model", kind, "boundary, shift, pareto or mma")
                ->check(CLI::IsMember({"boundary", "shift", "pareto", "mma"}));
        app->add_option("--d", d, "rank of the free group");
        app->add_option("--alpha", alpha, "stability index in (0, 2)");
        app->add_option("--theta", theta, "Pareto tail index");
        app->add_option("--f-table", f_table, "JSON kernel table for the mma model");
    }

    json to_json() const
    {
        json m{{"kind", kind}, {"d", d}, {"alpha", alpha}};
        if (kind == "pareto")
            m["theta"] = theta;
        if (!f_table.empty())
            m["f_table_file"] = f_table;
        return m;
    }
};

struct Outputs {
    std::string csv, json_path;

    void attach(CLI::App* app)
    {
        app->add_option("--csv", csv, "write per-replication records here");
        app->add_option("--json", json_path, "write the JSON result here instead of stdout");
    }

    void apply(json& cfg) const
    {
        json o = json::object();
        if (!csv.empty())
            o["csv"] = csv;
        if (!json_path.empty())
            o["json"] = json_path;
        if (!o.empty())
            cfg["output"] = o;
    }
};

int execute(const json& cfg_json, bool print_json, bool words_only = false)
{
    auto cfg = ExperimentConfig::parse(cfg_json);
    auto r = run(cfg);
    if (words_only) {
        for (const auto& row : r.csv_rows)
            std::cout << row[0] << '\n';
    } else if (print_json) {
        std::cout << r.to_json(cfg).dump(2) << '\n';
    }
    return r.pass ? kPass : kTolerance;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Extremes of stable random fields on free groups"};
    app.require_subcommand(1);

    json cfg;
    bool print_json = true;
    bool words_only = false;
    ModelFlags model;
    Outputs out;
    std::uint64_t seed = 0;
    int n = 0;
    std::size_t reps = 0;

    auto* en = app.add_subcommand("enumerate", "list the ball (or sphere) in shortlex order");
    bool sphere = false;
    en->add_option("--d", model.d)->required();
    en->add_option("--n", n)->required();
    en->add_flag("--sphere", sphere, "only words of length exactly n");
    en->callback([&] {
        cfg = {{"experiment", "enumerate"}, {"model", {{"d", model.d}}}, {"n", n}, {"sphere", sphere}};
        words_only = true;
    });

    auto* vb = app.add_subcommand("verify-boundary", "exact weakly-wandering and disjoint-translate reports");
    int depth_cap = 12, translate_max_n = 8;
    vb->add_option("--d", model.d);
    vb->add_option("--depth", depth_cap, "word-length cap for the weakly wandering cover");
    vb->add_option("--translate-max-n", translate_max_n);
    vb->callback([&] {
        cfg = {{"experiment", "verify-boundary"},
               {"model", {{"d", model.d}}},
               {"depth_cap", depth_cap},
               {"translate_max_n", translate_max_n}};
    });

    auto* vl = app.add_subcommand("verify-lemma", "vertex counts on sampled ell-subgraphs");
    int ell_max = 4, k_max = 8;
    std::size_t samples = 100;
    vl->add_option("--d", model.d);
    vl->add_option("--ell-max", ell_max);
    vl->add_option("--k-max", k_max);
    vl->add_option("--samples", samples);
    vl->add_option("--seed", seed);
    vl->callback([&] {
        cfg = {{"experiment", "verify-lemma"}, {"model", {{"d", model.d}}}, {"ell_max", ell_max},
               {"k_max", k_max},           {"samples", samples},          {"seed", seed}};
    });

    auto* st = app.add_subcommand("selftest", "exact and oracle checks");
    std::string scope = "all";
    st->add_option("scope", scope)->check(CLI::IsMember({"combinatorics", "boundary", "stable", "subgraphs", "all"}));
    st->callback([&] { cfg = {{"experiment", "selftest"}, {"scope", scope}}; });

    std::size_t series_terms = 0;
    auto* sm = app.add_subcommand("simulate-maxima", "replicated partial maxima of a field");
    ModelFlags sm_model;
    sm_model.attach(sm);
    out.attach(sm);
    double ks_tol = -1.0;
    sm->add_option("--n", n)->required();
    sm->add_option("--reps", reps)->required();
    sm->add_option("--seed", seed)->required();
    sm->add_option("--series-terms", series_terms, "LePage terms (0 = remainder rule)");
    sm->add_option("--ks-tolerance", ks_tol, "fail (exit 1) if the KS distance exceeds this");
    sm->callback([&] {
        cfg = {{"experiment", "simulate-maxima"}, {"model", sm_model.to_json()}, {"n", n},
               {"reps", reps},                  {"seed", seed},             {"series_terms", series_terms}};
        if (ks_tol >= 0.0)
            cfg["tolerances"] = {{"ks", ks_tol}};
        out.apply(cfg);
    });

    auto* sp = app.add_subcommand("simulate-pp", "atoms of the scaled point process above delta");
    ModelFlags sp_model;
    sp_model.attach(sp);
    out.attach(sp);
    double delta = 0.5;
    sp->add_option("--n", n)->required();
    sp->add_option("--reps", reps)->required();
    sp->add_option("--seed", seed)->required();
    sp->add_option("--delta", delta);
    sp->add_option("--series-terms", series_terms);
    sp->callback([&] {
        cfg = {{"experiment", "simulate-pp"}, {"model", sp_model.to_json()}, {"n", n}, {"reps", reps},
               {"seed", seed},               {"delta", delta},           {"series_terms", series_terms}};
        out.apply(cfg);
    });

    auto* li = app.add_subcommand("limit", "K_X, Laplace functional or samples of the limit process");
    ModelFlags li_model;
    li_model.kind = "mma";
    li_model.attach(li, false);
    out.attach(li);
    std::string mode = "kx";
    std::size_t mc = 2000;
    std::vector<double> breaks, values;
    int u_cap = -1;
    li->add_option("mode", mode)->check(CLI::IsMember({"kx", "laplace", "sample"}));
    li->add_option("--delta", delta);
    li->add_option("--mc", mc, "subgraph Monte Carlo samples");
    li->add_option("--seed", seed);
    li->add_option("--reps", reps);
    li->add_option("--g-breaks", breaks, "breakpoints of the piecewise-constant test function");
    li->add_option("--g-values", values, "values on the pieces (one more than breakpoints)");
    li->add_option("--u-radius-cap", u_cap);
    li->callback([&] {
        json m = li_model.to_json();
        cfg = {{"experiment", "limit"}, {"model", m}, {"mode", mode}, {"mc", mc}, {"seed", seed}, {"delta", delta}};
        if (reps > 0)
            cfg["reps"] = reps;
        if (u_cap >= 0)
            cfg["u_radius_cap"] = u_cap;
        if (!breaks.empty() || !values.empty())
            cfg["g"] = {{"breaks", breaks}, {"values", values}};
        out.apply(cfg);
    });

    auto* rc = app.add_subcommand("run", "run a JSON experiment config");
    std::string config_path;
    rc->add_option("config", config_path)->required()->check(CLI::ExistingFile);
    rc->callback([&] { cfg = read_json_file(config_path); });

    try {
        app.parse(argc, argv);
        if (cfg.contains("output") && cfg["output"].contains("json"))
            print_json = false;
        return execute(cfg, print_json, words_only);
    } catch (const CLI::ParseError& e) {
        int rc_ = app.exit(e);
        return rc_ == 0 ? kPass : kUsage;
    } catch (const ResourceError& e) {
        std::cerr << "resource error: " << e.what() << '\n';
        return kResource;
    } catch (const std::bad_alloc&) {
        std::cerr << "resource error: out of memory\n";
        return kResource;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
}
