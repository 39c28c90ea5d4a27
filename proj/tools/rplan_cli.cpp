// Command-line front end. Talks to the library only through rplan.h.
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rplan/rplan.h"

namespace {

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    std::string out;
    bool verbose = false;
};

void add_common(CLI::App* sub, Common& c, bool needs_config)
{
    auto* opt = sub->add_option("--config", c.config, "TOML run configuration");
    if (needs_config)
        opt->required();
    sub->add_option("--set", c.overrides, "override a config key, e.g. planner.n=20")->take_all();
    sub->add_option("--seed", c.seed, "run with this single seed");
    sub->add_option("--out", c.out, "output directory");
    sub->add_flag("-v,--verbose", c.verbose, "debug logging");
}

int fail(rplan_status status)
{
    std::fprintf(stderr, "error: %s\n", rplan_last_error());
    return rplan_exit_code(status);
}

using Command = rplan_status (*)(const rplan_config*, const rplan_run_options*, char**);

int run(const Common& c, const CLI::App* sub, Command cmd)
{
    rplan_config* config = nullptr;
    rplan_status st = rplan_config_load(c.config.c_str(), &config);
    if (st != RPLAN_OK)
        return fail(st);
    for (const auto& o : c.overrides) {
        st = rplan_config_set(config, o.c_str());
        if (st != RPLAN_OK) {
            rplan_config_free(config);
            return fail(st);
        }
    }
    rplan_run_options options{};
    if (sub->count("--seed")) {
        options.has_seed = 1;
        options.seed = c.seed;
    }
    if (!c.out.empty())
        options.out = c.out.c_str();
    char* summary = nullptr;
    st = cmd(config, &options, &summary);
    rplan_config_free(config);
    if (st != RPLAN_OK)
        return fail(st);
    std::fputs(summary, stdout);
    rplan_string_free(summary);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Reward-guided planning toolkit"};
    app.set_version_flag("--version", rplan_version());
    app.require_subcommand(1);

    Common synth, train, eval, plan, report;
    std::vector<std::string> run_dirs;

    auto* s_synth = app.add_subcommand("synthesize", "generate a pairwise reward dataset");
    add_common(s_synth, synth, true);
    auto* s_train = app.add_subcommand("train", "train a reward model on a pairwise dataset");
    add_common(s_train, train, true);
    auto* s_eval = app.add_subcommand("eval-rm", "pairwise accuracy of a reward model");
    add_common(s_eval, eval, true);
    auto* s_plan = app.add_subcommand("plan", "run a planner over a task suite");
    add_common(s_plan, plan, true);
    auto* s_report = app.add_subcommand("report", "merge run directories into one table");
    add_common(s_report, report, false);
    s_report->add_option("runs", run_dirs, "run directories");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const auto verbose = [](const Common& c) {
        if (c.verbose)
            rplan_set_log_level(3);
    };

    if (*s_synth) {
        verbose(synth);
        return run(synth, s_synth, &rplan_synthesize);
    }
    if (*s_train) {
        verbose(train);
        return run(train, s_train, &rplan_train);
    }
    if (*s_eval) {
        verbose(eval);
        return run(eval, s_eval, &rplan_eval_rm);
    }
    if (*s_plan) {
        verbose(plan);
        return run(plan, s_plan, &rplan_plan);
    }

    verbose(report);
    rplan_config* config = nullptr;
    if (!report.config.empty() || !report.overrides.empty()) {
        rplan_status st = report.config.empty() ? rplan_config_parse("", ".", &config)
                                                : rplan_config_load(report.config.c_str(), &config);
        if (st != RPLAN_OK)
            return fail(st);
        for (const auto& o : report.overrides) {
            st = rplan_config_set(config, o.c_str());
            if (st != RPLAN_OK) {
                rplan_config_free(config);
                return fail(st);
            }
        }
    }
    std::vector<const char*> ptrs;
    for (const auto& d : run_dirs)
        ptrs.push_back(d.c_str());
    char* summary = nullptr;
    const rplan_status st =
        rplan_report(config, ptrs.data(), ptrs.size(), report.out.empty() ? nullptr : report.out.c_str(), &summary);
    rplan_config_free(config);
    if (st != RPLAN_OK)
        return fail(st);
    std::fputs(summary, stdout);
    rplan_string_free(summary);
    return 0;
}
