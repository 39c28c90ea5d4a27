#include "rplan/rplan.h"

#include <cstring>
#include <memory>
#include <mutex>
#include <string>

#include <spdlog/sinks/base_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "rplan/game24.hpp"
#include "rplan/harness.hpp"
#include "rplan/reward.hpp"

struct rplan_config {
    rplan::harness::Config config;
};

struct rplan_model {
    rplan::reward::RewardParams params;
};

namespace {

thread_local std::string g_last_error;

rplan_status to_status(rplan::ErrorCode code)
{
    return static_cast<rplan_status>(static_cast<int>(code) + 1);
}

template <typename Fn>
rplan_status guarded(Fn&& fn)
{
    g_last_error.clear();
    try {
        fn();
        return RPLAN_OK;
    } catch (const rplan::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return RPLAN_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return RPLAN_ERR_INTERNAL;
    }
}

char* dup(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out)
        throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require(const void* p, const char* what)
{
    if (!p)
        throw rplan::Error(rplan::ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

class CallbackSink final : public spdlog::sinks::base_sink<std::mutex> {
public:
    CallbackSink(rplan_log_fn fn, void* user)
        : fn_(fn)
        , user_(user)
    {
    }

protected:
    void sink_it_(const spdlog::details::log_msg& msg) override
    {
        int level = 3;
        switch (msg.level) {
        case spdlog::level::critical:
        case spdlog::level::err:
            level = 0;
            break;
        case spdlog::level::warn:
            level = 1;
            break;
        case spdlog::level::info:
            level = 2;
            break;
        default:
            break;
        }
        const std::string text(msg.payload.data(), msg.payload.size());
        fn_(level, text.c_str(), user_);
    }
    void flush_() override {}

private:
    rplan_log_fn fn_;
    void* user_;
};

spdlog::level::level_enum to_spdlog(int level)
{
    switch (level) {
    case 0:
        return spdlog::level::err;
    case 1:
        return spdlog::level::warn;
    case 2:
        return spdlog::level::info;
    default:
        return spdlog::level::debug;
    }
}

// Library logging goes to stderr, warnings and up, until the host says otherwise.
const bool g_logger_ready = [] {
    auto logger = std::make_shared<spdlog::logger>("rplan", std::make_shared<spdlog::sinks::stderr_color_sink_mt>());
    logger->set_level(spdlog::level::warn);
    spdlog::set_default_logger(std::move(logger));
    return true;
}();

rplan_status run_command(const rplan_config* config, const rplan_run_options* options, char** summary,
                         rplan::harness::CommandResult (*cmd)(rplan::harness::Config,
                                                              const rplan::harness::CommandOptions&))
{
    return guarded([&] {
        require(config, "config");
        rplan::harness::CommandOptions opts;
        if (options) {
            if (options->has_seed)
                opts.seed = options->seed;
            if (options->out)
                opts.out = options->out;
        }
        const auto result = cmd(config->config, opts);
        if (summary)
            *summary = dup(result.summary);
    });
}

} // namespace

extern "C" {

const char* rplan_version(void)
{
    return rplan::harness::version().data();
}

const char* rplan_status_name(rplan_status status)
{
    if (status == RPLAN_OK)
        return "Ok";
    if (status == RPLAN_ERR_INTERNAL)
        return "Internal";
    const int code = static_cast<int>(status) - 1;
    if (code < 0 || code > static_cast<int>(rplan::ErrorCode::ConfigError))
        return "Unknown";
    return rplan::error_code_name(static_cast<rplan::ErrorCode>(code)).data();
}

const char* rplan_last_error(void)
{
    return g_last_error.c_str();
}

int rplan_exit_code(rplan_status status)
{
    if (status == RPLAN_OK)
        return 0;
    return status == RPLAN_ERR_CONFIG ? 2 : 3;
}

void rplan_set_log_level(int level)
{
    spdlog::set_level(to_spdlog(level));
}

void rplan_set_log_callback(rplan_log_fn fn, void* user)
{
    const auto level = spdlog::default_logger()->level();
    std::shared_ptr<spdlog::logger> logger;
    if (fn)
        logger = std::make_shared<spdlog::logger>("rplan", std::make_shared<CallbackSink>(fn, user));
    else
        logger = std::make_shared<spdlog::logger>("rplan", std::make_shared<spdlog::sinks::stderr_color_sink_mt>());
    logger->set_level(level);
    spdlog::set_default_logger(std::move(logger));
}

rplan_status rplan_config_load(const char* path, rplan_config** out)
{
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new rplan_config{rplan::harness::Config::load(path)};
    });
}

rplan_status rplan_config_parse(const char* text, const char* base_dir, rplan_config** out)
{
    return guarded([&] {
        require(text, "text");
        require(out, "out");
        *out = new rplan_config{rplan::harness::Config::parse(text, base_dir ? base_dir : "")};
    });
}

rplan_status rplan_config_set(rplan_config* config, const char* assignment)
{
    return guarded([&] {
        require(config, "config");
        require(assignment, "assignment");
        config->config.set(assignment);
    });
}

rplan_status rplan_config_snapshot(const rplan_config* config, char** out)
{
    return guarded([&] {
        require(config, "config");
        require(out, "out");
        *out = dup(config->config.snapshot());
    });
}

void rplan_config_free(rplan_config* config)
{
    delete config;
}

rplan_status rplan_synthesize(const rplan_config* config, const rplan_run_options* options, char** summary)
{
    return run_command(config, options, summary, &rplan::harness::cmd_synthesize);
}

rplan_status rplan_train(const rplan_config* config, const rplan_run_options* options, char** summary)
{
    return run_command(config, options, summary, &rplan::harness::cmd_train);
}

rplan_status rplan_eval_rm(const rplan_config* config, const rplan_run_options* options, char** summary)
{
    return run_command(config, options, summary, &rplan::harness::cmd_eval_rm);
}

rplan_status rplan_plan(const rplan_config* config, const rplan_run_options* options, char** summary)
{
    return run_command(config, options, summary, &rplan::harness::cmd_plan);
}

rplan_status rplan_report(const rplan_config* config, const char* const* run_dirs, size_t count, const char* out,
                          char** summary)
{
    return guarded([&] {
        if (count > 0)
            require(run_dirs, "run_dirs");
        std::vector<std::filesystem::path> dirs;
        if (config && config->config.has("report.runs")) {
            const auto listed = *config->config.get_strings("report.runs");
            for (const auto& d : listed) {
                std::filesystem::path p(d);
                dirs.push_back(p.is_relative() ? config->config.base_dir() / p : p);
            }
        }
        for (size_t i = 0; i < count; ++i) {
            require(run_dirs[i], "run directory");
            dirs.emplace_back(run_dirs[i]);
        }
        rplan::harness::CommandOptions opts;
        if (out)
            opts.out = out;
        const auto result = rplan::harness::cmd_report(dirs, opts);
        if (summary)
            *summary = dup(result.summary);
    });
}

void rplan_string_free(char* s)
{
    std::free(s);
}

rplan_status rplan_model_load(const char* path, rplan_model** out)
{
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new rplan_model{rplan::reward::load_model(path)};
    });
}

rplan_status rplan_model_score(const rplan_model* model, const char* trajectory_json, double* out)
{
    return guarded([&] {
        require(model, "model");
        require(trajectory_json, "trajectory_json");
        require(out, "out");
        const auto t = rplan::deserialize_trajectory(trajectory_json);
        *out = rplan::reward::score(model->params, t.instruction, t);
    });
}

void rplan_model_free(rplan_model* model)
{
    delete model;
}

rplan_status rplan_game24_solve(int a, int b, int c, int d, int* solvable, char** witness)
{
    return guarded([&] {
        require(solvable, "solvable");
        const int numbers[4] = {a, b, c, d};
        const auto solution = rplan::game24::oracle_solve(rplan::game24::make_puzzle(numbers));
        *solvable = solution.solvable ? 1 : 0;
        if (witness) {
            *witness = nullptr;
            if (solution.solvable) {
                std::string text;
                for (const auto& step : solution.witness)
                    text += rplan::game24::render_step(step) + "\n";
                *witness = dup(text);
            }
        }
    });
}

rplan_status rplan_judge_parse_score(const char* reply, double* out)
{
    return guarded([&] {
        require(reply, "reply");
        require(out, "out");
        *out = rplan::reward::parse_judge_score(reply);
    });
}

rplan_status rplan_trajectory_validate(const char* trajectory_json, size_t max_actions, char** problem)
{
    return guarded([&] {
        require(trajectory_json, "trajectory_json");
        require(problem, "problem");
        const auto t = rplan::deserialize_trajectory(trajectory_json);
        const auto issue = rplan::validate_trajectory(t, max_actions);
        *problem = issue ? dup(*issue) : nullptr;
    });
}

} // extern "C"
