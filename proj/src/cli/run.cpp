#include <cstdlib>
#include <ostream>

#include "CLI11.hpp"
#include "csg/cli/cli.hpp"
#include "csg/core/errors.hpp"

namespace csg::cli {
namespace {

// A flag that lands in the merged config under `key` when given.
struct Flag {
    std::string key;
    std::string value;
    CLI::Option* option = nullptr;
};

struct Command {
    CLI::App* app = nullptr;
    std::vector<std::unique_ptr<Flag>> flags;
    std::string config_file;
    std::vector<std::string> sets;

    void add(const std::string& name, const std::string& key, const std::string& help) {
        auto f = std::make_unique<Flag>();
        f->key = key;
        f->option = app->add_option(name, f->value, help);
        flags.push_back(std::move(f));
    }
    void add_switch(const std::string& name, const std::string& key, const std::string& help) {
        auto f = std::make_unique<Flag>();
        f->key = key;
        f->value = "true";
        f->option = app->add_flag(name, help);
        flags.push_back(std::move(f));
    }
};

Command make_command(CLI::App& root, const std::string& name, const std::string& help) {
    Command c;
    c.app = root.add_subcommand(name, help);
    c.app->add_option("--config", c.config_file, "key = value settings file; flags override it");
    c.app->add_option("--set", c.sets, "extra key=value setting, repeatable");
    return c;
}

void add_training_flags(Command& c) {
    c.add("--k", "k", "surrogate scenarios per context");
    c.add("--lambda", "lambda", "MMD weight (relative with --lambda-relative)");
    c.add_switch("--lambda-relative", "lambda_relative", "scale lambda by the distributional net's loss");
    c.add("--rounds", "rounds", "dynamic refinement rounds");
    c.add("--epochs", "epochs", "task-net epochs");
    c.add("--lossnet-epochs", "lossnet_epochs", "loss-net epochs");
    c.add("--lr", "lr", "task-net learning rate");
    c.add("--batch-size", "batch_size", "minibatch size");
    c.add("--replay-window", "replay_window", "dynamic generations kept in the replay buffer");
}

Config merged(const Command& c) {
    Config config;
    if (!c.config_file.empty()) config = read_config_file(c.config_file);
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw InputError("--set expects key=value, found '" + s + "'");
        config[s.substr(0, eq)] = s.substr(eq + 1);
    }
    for (const auto& f : c.flags)
        if (f->option->count() > 0) config[f->key] = f->value;
    if (!config.count("seed"))
        if (const char* env_seed = std::getenv("CSG_SEED")) config["seed"] = env_seed;
    return config;
}

std::string one_line(std::string text) {
    for (char& ch : text)
        if (ch == '\n' || ch == '\r') ch = ' ';
    return text;
}

int fail(std::ostream& err, int code, const std::string& message) {
    err << "error " << exit_code_name(code) << ": " << one_line(message) << '\n';
    return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App root("Contextual scenario generation for two-stage stochastic programs", "csg");
    root.require_subcommand(1);

    Command gen = make_command(root, "gen-env", "generate a training sample and evaluation supports");
    gen.add("--problem", "problem", "newsvendor, cep1, cvar or mnv");
    gen.add("--seed", "seed", "environment seed (falls back to CSG_SEED)");
    gen.add("--n", "n", "training samples");
    gen.add("--n-eval", "n_eval", "evaluation contexts");
    gen.add("--out", "out", "output directory");

    Command tr = make_command(root, "train", "train an mmd, static or dynamic artifact");
    tr.add("--data", "data", "directory written by gen-env");
    tr.add("--method", "method", "mmd, static or dynamic");
    tr.add("--mmd", "mmd", "existing mmd artifact to start from");
    tr.add("--seed", "seed", "training seed (falls back to CSG_SEED)");
    tr.add("--jobs", "jobs", "concurrent solver calls");
    tr.add("--out", "out", "artifact directory");
    add_training_flags(tr);

    Command ev = make_command(root, "eval", "evaluate methods against the full-support optimum");
    ev.add("--data", "data", "directory written by gen-env");
    ev.add("--methods", "methods", "comma list: oracle, ev, qr, <artifact dir> or <label>=<dir>");
    ev.add("--jobs", "jobs", "concurrent instances");
    ev.add_switch("--timing", "timing", "record wall times (reports are then not reproducible)");
    ev.add("--out", "out", "report directory");

    Command rep = make_command(root, "report", "summarise one or more gaps.csv files");
    std::vector<std::string> inputs;
    rep.app->add_option("--in", inputs, "gaps.csv files")->expected(1, -1);
    rep.add("--out", "out", "summary directory");

    try {
        root.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << root.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << root.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        return fail(err, kUsage, e.what());
    }

    try {
        if (gen.app->parsed()) {
            gen_env(merged(gen), out);
        } else if (tr.app->parsed()) {
            train(merged(tr), out);
        } else if (ev.app->parsed()) {
            evaluate(merged(ev), out);
        } else {
            Config config = merged(rep);
            std::string list;
            for (const auto& i : inputs) list += (list.empty() ? "" : ",") + i;
            if (!list.empty()) config["inputs"] = list;
            report(config, out);
        }
    } catch (const MissingError& e) {
        return fail(err, kMissing, e.what());
    } catch (const IoError& e) {
        return fail(err, kIo, e.what());
    } catch (const InputError& e) {
        return fail(err, kInput, e.what());
    } catch (const TrainingError& e) {
        return fail(err, kTraining, e.what());
    } catch (const SolverError& e) {
        return fail(err, kSolver, e.what());
    } catch (const BudgetError& e) {
        return fail(err, kBudget, e.what());
    } catch (const std::exception& e) {
        return fail(err, kInternal, e.what());
    }
    return kOk;
}

}  // namespace csg::cli
