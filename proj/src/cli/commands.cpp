#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "csg/cli/cli.hpp"
#include "csg/core/errors.hpp"
#include "csg/core/format.hpp"
#include "csg/core/random.hpp"
#include "csg/evaluation/evaluation.hpp"
#include "csg/training/training.hpp"

namespace fs = std::filesystem;

namespace csg::cli {
namespace {

// Seed streams derived from the gen-env seed.
enum : std::uint64_t { kSampleStream = 1, kEvalStream = 2 };

const char* const kEnvMeta = "env.meta";
const char* const kTrainData = "train.csv";
const char* const kEvalDir = "eval";
const char* const kTaskModel = "tasknet.model";
const char* const kLossModel = "lossnet.model";
const char* const kMeta = "meta";

const std::string& require(const Config& c, const std::string& key) {
    const auto it = c.find(key);
    if (it == c.end() || it->second.empty()) throw InputError("missing required setting '" + key + "'");
    return it->second;
}

std::string value_or(const Config& c, const std::string& key, const std::string& fallback) {
    const auto it = c.find(key);
    return it == c.end() ? fallback : it->second;
}

std::size_t count_setting(const Config& c, const std::string& key, std::size_t fallback) {
    const auto it = c.find(key);
    if (it == c.end()) return fallback;
    const long long v = parse_int(it->second);
    if (v < 0) throw InputError("'" + key + "' must be nonnegative");
    return static_cast<std::size_t>(v);
}

bool flag_setting(const Config& c, const std::string& key) {
    const std::string v = value_or(c, key, "false");
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw InputError("'" + key + "' must be true or false");
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    writer(out);
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingError("cannot open " + path.string());
    return in;
}

std::string instance_name(std::size_t i) {
    std::string digits = std::to_string(i);
    if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
    return "instance_" + digits + ".csv";
}

// Settings a data directory was generated with; problem and env overrides
// travel with the data so later stages see the same problem.
struct DataDir {
    fs::path dir;
    Config meta;
    twostage::ProblemSpec spec;
};

DataDir open_data(const Config& config) {
    DataDir d;
    d.dir = require(config, "data");
    if (!fs::is_directory(d.dir)) throw MissingError("data directory " + d.dir.string() + " does not exist");
    d.meta = read_config_file(d.dir / kEnvMeta);
    d.spec = twostage::ProblemSpec::make(twostage::parse_problem_kind(require(d.meta, "problem")));
    d.spec.apply_overrides(d.meta);
    d.spec.validate();
    return d;
}

env::JointSample load_train(const DataDir& d) {
    auto in = open_input(d.dir / kTrainData);
    return env::read_dataset(in);
}

std::vector<eval::Instance> load_instances(const DataDir& d) {
    const std::size_t n = count_setting(d.meta, "n_eval", 0);
    std::vector<eval::Instance> out;
    for (std::size_t i = 0; i < n; ++i) {
        auto in = open_input(d.dir / kEvalDir / instance_name(i));
        auto file = env::read_support(in);
        if (file.support.points.cols() != d.spec.scenario_dim())
            throw IoError("support file " + instance_name(i) + " has the wrong outcome dimension");
        out.push_back({std::move(file.context), std::move(file.support)});
    }
    return out;
}

training::TaskNet load_task_net(const fs::path& dir) {
    auto in = open_input(dir / kTaskModel);
    return training::read_task_net(in);
}

void save_task_net(const fs::path& dir, const training::TaskNet& net) {
    write_file(dir / kTaskModel, [&](std::ostream& o) { training::write_task_net(o, net); });
}

}  // namespace

void gen_env(const Config& config, std::ostream& log) {
    const auto kind = twostage::parse_problem_kind(require(config, "problem"));
    const std::uint64_t seed = count_setting(config, "seed", 0);
    const std::size_t n = count_setting(config, "n", 500);
    const std::size_t n_eval = count_setting(config, "n_eval", 100);
    if (n == 0) throw InputError("'n' must be positive");
    const fs::path out = require(config, "out");

    // Fail on bad problem overrides before generating anything.
    auto spec = twostage::ProblemSpec::make(kind);
    spec.apply_overrides(config);
    spec.validate();
    const auto e = env::make_env(kind, seed, config);

    ensure_dir(out / kEvalDir);
    const auto sample = env::sample_joint(e, n, derive_seed(seed, kSampleStream));
    write_file(out / kTrainData, [&](std::ostream& o) { env::write_dataset(o, sample); });
    const auto instances = eval::make_instances(e, n_eval, derive_seed(seed, kEvalStream));
    for (std::size_t i = 0; i < instances.size(); ++i)
        write_file(out / kEvalDir / instance_name(i),
                   [&](std::ostream& o) { env::write_support(o, instances[i].context, instances[i].support); });

    Config meta;
    const std::string prefix = twostage::problem_name(kind) + ".";
    for (const auto& [key, value] : config)
        if (key.rfind("env.", 0) == 0 || key.rfind(prefix, 0) == 0) meta[key] = value;
    meta["problem"] = twostage::problem_name(kind);
    meta["seed"] = std::to_string(seed);
    meta["n"] = std::to_string(n);
    meta["n_eval"] = std::to_string(n_eval);
    meta["support_size"] = std::to_string(e.support_size);
    meta["train_hash"] = file_hash(out / kTrainData);
    write_file(out / kEnvMeta, [&](std::ostream& o) { write_config(o, meta); });
    log << "wrote " << n << " training samples and " << n_eval << " evaluation supports to " << out.string() << '\n';
}

void train(const Config& config, std::ostream& log) {
    const DataDir data = open_data(config);
    const std::string method = require(config, "method");
    if (method != "mmd" && method != "static" && method != "dynamic")
        throw InputError("method must be mmd, static or dynamic, found '" + method + "'");
    const fs::path out = require(config, "out");
    training::TrainConfig cfg = training::TrainConfig::from_map(config);
    if (method == "static") cfg.rounds = 0;
    if (method == "dynamic" && cfg.rounds == 0) throw InputError("dynamic training needs rounds >= 1");

    const auto sample = load_train(data);
    if (sample.outcomes.cols() != data.spec.scenario_dim())
        throw IoError("training data outcome dimension does not match the problem");
    const bool relu = data.spec.nonnegative_outcomes();
    ensure_dir(out);

    Config meta = cfg.to_map();
    meta["method"] = method;
    meta["problem"] = twostage::problem_name(data.spec.kind);
    meta["data"] = data.dir.string();
    meta["data_hash"] = file_hash(data.dir / kTrainData);

    auto train_mmd = [&] {
        training::FitReport rep;
        auto net = training::train_dcsg(sample, cfg, relu, &rep);
        log << "distributional net: " << rep.epochs_run << " epochs, best holdout " << format_double(rep.best_score)
            << '\n';
        return std::make_pair(net, rep);
    };

    if (method == "mmd") {
        const auto [net, rep] = train_mmd();
        save_task_net(out, net);
        meta["best_epoch"] = std::to_string(rep.best_epoch);
        meta["holdout_mmd"] = format_double(rep.best_score);
        meta["final_mmd"] = format_double(training::empirical_mmd(net, sample));
        meta["lambda_abs"] = "0";
    } else {
        training::TaskNet mmd_net;
        if (const auto it = config.find("mmd"); it != config.end() && !it->second.empty()) {
            const fs::path dir = it->second;
            if (!fs::exists(dir / kTaskModel)) throw MissingError("mmd artifact " + dir.string() + " has no " + kTaskModel);
            mmd_net = load_task_net(dir);
            if (mmd_net.k != cfg.k || mmd_net.p != data.spec.scenario_dim())
                throw InputError("mmd artifact " + dir.string() + " does not match K or the problem");
            meta["mmd"] = dir.string();
        } else {
            // Prerequisite stage, stored next to the result.
            const fs::path dir = out / "mmd";
            ensure_dir(dir);
            mmd_net = train_mmd().first;
            save_task_net(dir, mmd_net);
            Config mmd_meta = cfg.to_map();
            mmd_meta["method"] = "mmd";
            mmd_meta["problem"] = meta["problem"];
            mmd_meta["data_hash"] = meta["data_hash"];
            mmd_meta["final_mmd"] = format_double(training::empirical_mmd(mmd_net, sample));
            mmd_meta["lambda_abs"] = "0";
            write_file(dir / kMeta, [&](std::ostream& o) { write_config(o, mmd_meta); });
            meta["mmd"] = dir.string();
        }
        const auto result = training::train_dynamic(data.spec, sample, cfg, mmd_net);
        for (const auto& w : result.warnings) log << "warning: " << w << '\n';
        save_task_net(out, result.task);
        write_file(out / kLossModel, [&](std::ostream& o) { training::write_loss_model(o, result.lossnet); });
        std::string gens;
        for (std::size_t g : result.generations) gens += (gens.empty() ? "" : ",") + std::to_string(g);
        meta["lambda_abs"] = format_double(result.lambda);
        meta["generations"] = gens;
        meta["loss_failures"] = std::to_string(result.failures);
        meta["warnings"] = std::to_string(result.warnings.size());
        meta["final_mmd"] = format_double(training::empirical_mmd(result.task, sample));
        const auto terms = training::composite_objective(result.task, result.lossnet, sample, result.lambda);
        meta["final_loss_term"] = format_double(terms.loss_term);
        meta["final_mmd_term"] = format_double(terms.mmd_term);
    }
    write_file(out / kMeta, [&](std::ostream& o) { write_config(o, meta); });
    log << "wrote " << method << " artifact to " << out.string() << '\n';
}

void evaluate(const Config& config, std::ostream& log) {
    const DataDir data = open_data(config);
    const fs::path out = require(config, "out");
    const auto& spec = data.spec;

    struct Requested {
        std::string label;
        std::string kind;  // oracle, ev, qr or artifact
        fs::path dir;
    };
    std::vector<Requested> requested;
    for (const auto& raw : split(require(config, "methods"), ',')) {
        const std::string token = trim(raw);
        if (token.empty()) continue;
        if (token == "oracle" || token == "ev" || token == "qr") {
            requested.push_back({token, token, {}});
            continue;
        }
        const auto eq = token.find('=');
        fs::path dir = eq == std::string::npos ? fs::path(token) : fs::path(token.substr(eq + 1));
        std::string label = eq == std::string::npos ? dir.lexically_normal().filename().string() : token.substr(0, eq);
        if (label.empty()) label = dir.lexically_normal().parent_path().filename().string();
        requested.push_back({label, "artifact", dir});
    }
    if (requested.empty()) throw InputError("no methods requested");
    std::vector<std::string> missing;
    for (const auto& r : requested)
        if (r.kind == "artifact" && !fs::exists(r.dir / kTaskModel)) missing.push_back(r.dir.string());
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw MissingError("missing artifacts: " + list);
    }
    for (std::size_t i = 0; i < requested.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (requested[i].label == requested[j].label)
                throw InputError("method label '" + requested[i].label + "' is used twice");

    const auto instances = load_instances(data);
    if (instances.empty()) throw InputError("the data directory has no evaluation instances");

    std::vector<training::TaskNet> nets;
    nets.reserve(requested.size());
    std::vector<eval::Method> methods;
    Config method_rows;
    std::vector<double> qr_beta;
    for (const auto& r : requested) {
        if (r.kind == "oracle") {
            methods.push_back({"oracle", nullptr});
        } else if (r.kind == "ev") {
            methods.push_back({r.label, [&spec](const eval::Instance& i) {
                                   return eval::expected_value_from_support(spec, i.support);
                               }});
        } else if (r.kind == "qr") {
            if (spec.kind != twostage::ProblemKind::Newsvendor)
                throw InputError("the quantile regression benchmark applies to the newsvendor only");
            qr_beta = eval::quantile_regression_benchmark(load_train(data), twostage::newsvendor_fractile(spec.newsvendor));
            methods.push_back({r.label, [&spec, &qr_beta](const eval::Instance& i) {
                                   return eval::quantile_policy(spec, qr_beta, i.context);
                               }});
        } else {
            nets.push_back(load_task_net(r.dir));
            const auto& net = nets.back();
            if (net.p != spec.scenario_dim() || net.context_dim() != instances.front().context.size())
                throw InputError("artifact " + r.dir.string() + " does not match the data");
            methods.push_back({r.label, [&spec, &net](const eval::Instance& i) {
                                   return eval::predict_and_solve(net, spec, i.context).first_stage;
                               }});
            Config meta;
            if (fs::exists(r.dir / kMeta)) meta = read_config_file(r.dir / kMeta);
            method_rows[r.label] = value_or(meta, "method", "artifact") + "," + value_or(meta, "k", "") + "," +
                                   value_or(meta, "lambda_abs", "") + "," + r.dir.string();
        }
    }

    eval::EvalOptions opts;
    opts.jobs = std::max<std::size_t>(1, count_setting(config, "jobs", 1));
    opts.timing = flag_setting(config, "timing");
    opts.budget.max_support = count_setting(config, "budget.max_support", opts.budget.max_support);
    opts.budget.max_binaries = count_setting(config, "budget.max_binaries", opts.budget.max_binaries);
    const auto result = eval::evaluate_methods(spec, instances, methods, opts);

    ensure_dir(out);
    write_file(out / "gaps.csv", [&](std::ostream& o) { eval::write_gaps_csv(o, result.records); });
    const auto order = eval::method_order(result.records);
    for (const auto& m : order)
        write_file(out / ("cdf_" + m + ".csv"),
                   [&](std::ostream& o) { eval::write_cdf_csv(o, eval::gap_cdf(result.records, m)); });
    write_file(out / "wins.csv",
               [&](std::ostream& o) { eval::write_wins_csv(o, eval::win_table(result.records), order); });
    write_file(out / "cdf.svg", [&](std::ostream& o) { eval::write_cdf_svg(o, result.records); });
    write_file(out / "methods.csv", [&](std::ostream& o) {
        o << "label,source,k,lambda,artifact\n";
        for (const auto& r : requested) {
            const auto it = method_rows.find(r.label);
            o << r.label << ',' << (it == method_rows.end() ? r.kind + ",,," : it->second) << '\n';
        }
    });
    write_file(out / "failures.txt", [&](std::ostream& o) {
        for (const auto& f : result.failures) o << f << '\n';
    });
    for (const auto& f : result.failures) log << "warning: excluded " << f << '\n';
    log << "evaluated " << methods.size() << " methods on " << instances.size() - result.failures.size() << " of "
        << instances.size() << " instances; reports in " << out.string() << '\n';
}

void report(const Config& config, std::ostream& log) {
    const fs::path out = require(config, "out");
    struct Row {
        std::string source, method, k, lambda;
        eval::MethodSummary summary;
        double wins = 0.0;
    };
    std::vector<Row> rows;
    for (const auto& raw : split(require(config, "inputs"), ',')) {
        const fs::path path = trim(raw);
        if (path.empty()) continue;
        auto in = open_input(path);
        const auto records = eval::read_gaps_csv(in);
        // Optional K and lambda columns from the evaluation's method list.
        std::map<std::string, std::pair<std::string, std::string>> params;
        if (const fs::path mpath = path.parent_path() / "methods.csv"; fs::exists(mpath)) {
            auto min = open_input(mpath);
            std::string line;
            std::getline(min, line);
            while (std::getline(min, line)) {
                const auto f = split(line, ',');
                if (f.size() >= 4) params[f[0]] = {f[2], f[3]};
            }
        }
        const auto wins = eval::win_table(records);
        const std::string source = path.parent_path().filename().string();
        for (const auto& s : eval::summarize(records)) {
            Row r{source, s.method, params[s.method].first, params[s.method].second, s, 0.0};
            r.wins = wins.count(s.method) ? wins.at(s.method) : 0.0;
            rows.push_back(std::move(r));
        }
    }
    if (rows.empty()) throw InputError("no evaluation records to report");

    ensure_dir(out);
    const std::vector<std::string> header{"source", "method", "k", "lambda", "instances", "median_gap", "mean_gap",
                                          "win_fraction"};
    std::vector<std::vector<std::string>> table;
    for (const auto& r : rows)
        table.push_back({r.source, r.method, r.k, r.lambda, std::to_string(r.summary.instances),
                         format_double(r.summary.median_gap), format_double(r.summary.mean_gap), format_double(r.wins)});
    write_file(out / "summary.csv", [&](std::ostream& o) {
        for (std::size_t j = 0; j < header.size(); ++j) o << (j ? "," : "") << header[j];
        o << '\n';
        for (const auto& row : table) {
            for (std::size_t j = 0; j < row.size(); ++j) o << (j ? "," : "") << row[j];
            o << '\n';
        }
    });
    std::vector<std::size_t> width(header.size());
    for (std::size_t j = 0; j < header.size(); ++j) {
        width[j] = header[j].size();
        for (const auto& row : table) width[j] = std::max(width[j], row[j].size());
    }
    std::ostringstream text;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t j = 0; j + 1 < row.size(); ++j)
            text << std::left << std::setw(static_cast<int>(width[j])) << row[j] << "  ";
        text << row.back();
        text << '\n';
    };
    emit(header);
    for (const auto& row : table) emit(row);
    write_file(out / "summary.txt", [&](std::ostream& o) { o << text.str(); });
    log << text.str();
}

}  // namespace csg::cli
