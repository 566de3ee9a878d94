// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "empathy/coe_format.hpp"
#include "empathy/corpus.hpp"
#include "empathy/error.hpp"
#include "empathy/grpo.hpp"
#include "empathy/metrics.hpp"
#include "empathy/preference.hpp"
#include "empathy/preference_server.hpp"
#include "empathy/random.hpp"
#include "empathy/reward_model.hpp"
#include "empathy/text.hpp"

namespace empathy::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

/// Non-blank lines of a JSON-lines file, parsed.
std::vector<json> read_json_lines(const fs::path& path) {
    auto in = open_in(path);
    std::vector<json> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::is_blank(line)) continue;
        try {
            rows.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (in.bad()) throw IoError("read from '" + path.string() + "' failed");
    return rows;
}

/// Writes `doc` plus a newline to `path`, or to `fallback` when `path` is empty.
void emit_json(const json& doc, const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
        fallback << doc.dump(2) << '\n';
        return;
    }
    auto out = open_out(path);
    out << doc.dump(2) << '\n';
    finish(out, path);
}

void log_config(std::ostream& err, const std::string& subcommand, const json& config) {
    err << json{{"subcommand", subcommand}, {"config", config}}.dump() << '\n';
}

std::vector<corpus::QARecord> load_records(const std::string& path, std::ostream& err) {
    auto parsed = corpus::load_corpus(path);
    for (const auto& d : parsed.diagnostics) {
        err << path << ":" << d.line << ": " << d.message << '\n';
    }
    return std::move(parsed.records);
}

int exit_code(ErrorKind kind) {
    return kind == ErrorKind::io ? 2 : 1;
}

// ---- Subcommand bodies -------------------------------------------------------------

struct IngestOpts {
    std::string in, out;
    bool keep_raw = false;
    bool strict = false;
};

int do_ingest(const IngestOpts& o, std::ostream& err) {
    auto parsed = corpus::load_corpus(o.in);
    for (const auto& d : parsed.diagnostics) err << o.in << ":" << d.line << ": " << d.message << '\n';
    if (o.strict && !parsed.diagnostics.empty()) {
        err << "ingest: " << parsed.diagnostics.size() << " bad line(s); nothing written (--strict)\n";
        return 1;
    }
    std::vector<corpus::QARecord> records;
    records.reserve(parsed.records.size());
    for (const auto& r : parsed.records) records.push_back(o.keep_raw ? r : corpus::anonymize(r));
    corpus::save_corpus(o.out, records);
    err << json{{"records", records.size()}, {"rejected_lines", parsed.diagnostics.size()}}.dump() << '\n';
    return 0;
}

struct FilterOpts {
    std::string in, out;
    std::size_t min_chars = corpus::kDefaultMinChars;
};

int do_filter(const FilterOpts& o, std::ostream& err) {
    const auto records = load_records(o.in, err);
    const auto kept = corpus::filter_corpus(records, o.min_chars);
    corpus::save_corpus(o.out, kept);
    std::size_t answers_in = 0;
    std::size_t answers_out = 0;
    for (const auto& r : records) answers_in += r.answers.size();
    for (const auto& r : kept) answers_out += r.answers.size();
    err << json{{"records_in", records.size()},
                {"records_out", kept.size()},
                {"answers_in", answers_in},
                {"answers_out", answers_out}}
               .dump()
        << '\n';
    return 0;
}

struct SftOpts {
    std::string in, coe, out;
};

int do_sft_build(const SftOpts& o, std::ostream& err) {
    const auto records = load_records(o.in, err);
    std::map<std::string, const corpus::QARecord*> by_id;
    for (const auto& r : records) by_id.emplace(r.id, &r);

    const auto chains = read_json_lines(o.coe);
    auto out = open_out(o.out);
    std::size_t n = 0;
    for (const auto& c : chains) {
        const std::string id = c.at("id").get<std::string>();
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw ValidationError("chain references unknown record '" + id + "'");
        const auto index = c.value("answer_index", std::size_t{0});
        if (index >= it->second->answers.size()) {
            throw ValidationError("record '" + id + "' has no answer " + std::to_string(index));
        }
        coe::CoeOutput chain{c.at("l1").get<std::string>(), c.at("l2").get<std::string>(),
                             c.at("l3").get<std::string>(), c.at("l4").get<std::string>(),
                             it->second->answers[index].text};
        out << corpus::to_json(corpus::build_sft_record(*it->second, index, chain)).dump() << '\n';
        ++n;
    }
    finish(out, o.out);
    err << json{{"sft_records", n}}.dump() << '\n';
    return 0;
}

struct RewardTrainOpts {
    std::string in, out;
    reward::RewardConfig config;
    double holdout = 0.2;
    bool threshold_given = false;
};

int do_reward_train(const RewardTrainOpts& o, std::ostream& out, std::ostream& err) {
    if (!(o.holdout >= 0.0 && o.holdout < 1.0)) throw ValidationError("--holdout must lie in [0, 1)");
    const auto records = load_records(o.in, err);
    if (records.empty()) throw ValidationError("corpus is empty");

    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(splitmix64(o.config.seed));
    shuffle(std::span(order), rng);
    auto n_hold = static_cast<std::size_t>(std::llround(o.holdout * static_cast<double>(records.size())));
    if (n_hold >= records.size()) n_hold = records.size() - 1;

    std::vector<corpus::QARecord> train;
    std::vector<corpus::QARecord> held;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_hold ? held : train).push_back(records[order[i]]);
    }

    auto result = reward::train_reward_model(train, o.config);
    for (const auto& w : result.log.warnings) err << "warning: " << w << '\n';

    double threshold = o.config.threshold;
    json calibration = nullptr;
    const auto pairs = reward::make_labeled_pairs(held, splitmix64(o.config.seed ^ 0x686f6c646f7574ULL));
    const bool has_both = std::any_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.positive; }) &&
                          std::any_of(pairs.begin(), pairs.end(), [](const auto& p) { return !p.positive; });
    if (has_both) {
        const auto cal = reward::calibrate_threshold(pairs, result.params);
        for (const auto& w : cal.warnings) err << "warning: " << w << '\n';
        calibration = {{"threshold", cal.threshold},
                       {"balanced_accuracy", cal.balanced_accuracy},
                       {"separation_gap", reward::separation_gap(pairs, result.params)},
                       {"pairs", pairs.size()}};
        if (!o.threshold_given) threshold = cal.threshold;
    } else {
        err << "warning: held-out split too small to calibrate; using threshold " << threshold << '\n';
    }

    json extra = {{"threshold", threshold},
                  {"margin", o.config.margin},
                  {"epoch_loss", result.log.epoch_loss},
                  {"calibration", calibration}};
    reward::save_encoder(o.out, result.params, extra);
    out << json{{"checkpoint", o.out},
                {"train_records", train.size()},
                {"heldout_records", held.size()},
                {"threshold", threshold},
                {"epoch_loss", result.log.epoch_loss},
                {"calibration", calibration}}
               .dump(2)
        << '\n';
    return 0;
}

struct RewardScoreOpts {
    std::string in, out, model;
    double threshold = 0.0;
    bool threshold_given = false;
};

int do_reward_score(const RewardScoreOpts& o, std::ostream& out, std::ostream& err) {
    const auto loaded = reward::load_encoder(o.model);
    double threshold = o.threshold;
    if (!o.threshold_given) {
        if (!loaded.header.contains("threshold")) {
            throw ValidationError("checkpoint has no stored threshold; pass --threshold");
        }
        threshold = loaded.header.at("threshold").get<double>();
    }
    const auto rows = read_json_lines(o.in);
    std::ofstream file;
    if (!o.out.empty()) file = open_out(o.out);
    std::ostream& sink = o.out.empty() ? out : file;
    std::size_t unencodable = 0;
    for (const auto& row : rows) {
        const std::string q = row.at("q").get<std::string>();
        const std::string a = row.at("a").get<std::string>();
        const auto sim = reward::similarity(q, a, loaded.params);
        json line = {{"similarity", sim ? json(*sim) : json(nullptr)},
                     {"reward", sim && *sim > threshold ? 1 : 0}};
        if (row.contains("id")) line["id"] = row["id"];
        if (!sim) ++unencodable;
        sink << line.dump() << '\n';
    }
    if (!o.out.empty()) finish(file, o.out);
    if (unencodable > 0) err << "warning: " << unencodable << " pair(s) could not be encoded; reward 0\n";
    return 0;
}

struct GrpoOpts {
    std::string task = "tag-emission";
    std::string out, checkpoint;
    grpo::GrpoConfig config;
    std::size_t probe = 100;
    double warm_start = grpo::kDefaultWarmStartBias;
};

int do_grpo_train(const GrpoOpts& o, std::ostream& out, std::ostream& err) {
    if (o.task != "tag-emission") throw ValidationError("unknown task '" + o.task + "'");
    grpo::validate(o.config);
    const auto task = grpo::make_tag_emission_task(o.warm_start);
    const std::uint64_t probe_seed = grpo::probe_seed(o.config.seed);
    const std::size_t probe_len = o.config.max_len;
    const auto before = grpo::probe_reward(task.init, task.prompts, task.reward, o.probe,
                                           o.config.rollout_temperature, probe_len, probe_seed);

    std::ofstream file;
    if (!o.out.empty()) file = open_out(o.out);
    std::ostream& trace = o.out.empty() ? out : file;
    const auto result = grpo::grpo_train(task.init, task.prompts, task.reward, o.config,
                                         [&](const grpo::TraceRow& row) { trace << grpo::to_json(row).dump() << '\n'; });
    if (!o.out.empty()) finish(file, o.out);

    const auto after = grpo::probe_reward(result.params, task.prompts, task.reward, o.probe,
                                          o.config.rollout_temperature, probe_len, probe_seed);
    if (!o.checkpoint.empty()) {
        grpo::save_policy(o.checkpoint, result.params, {{"task", o.task}, {"steps", o.config.steps}});
    }
    const json summary = {{"probe_rollouts", o.probe},
                          {"probe_format_reward_initial", before.format},
                          {"probe_format_reward_final", after.format},
                          {"final_mean_format_reward",
                           result.trace.empty() ? 0.0 : result.trace.back().mean_format_reward},
                          {"max_logit_drift", grpo::max_logit_drift(task.init, result.params)}};
    (o.out.empty() ? err : out) << summary.dump() << '\n';
    return 0;
}

struct EvaluateOpts {
    std::string hyp, refs, out, summary;
};

int do_evaluate(const EvaluateOpts& o, std::ostream& out, std::ostream& err) {
    const auto records = load_records(o.refs, err);
    std::map<std::string, const corpus::QARecord*> by_id;
    for (const auto& r : records) by_id.emplace(r.id, &r);

    std::ofstream file;
    if (!o.out.empty()) file = open_out(o.out);
    std::vector<metrics::MetricVector> per_question;
    for (const auto& h : read_json_lines(o.hyp)) {
        const std::string id = h.at("id").get<std::string>();
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw ValidationError("prediction for unknown record '" + id + "'");
        std::vector<std::string> refs;
        for (const auto& a : it->second->answers) refs.push_back(a.text);
        if (refs.empty()) throw ValidationError("record '" + id + "' has no reference answers");
        const auto v = metrics::score_multi_reference(h.at("text").get<std::string>(), refs);
        per_question.push_back(v);
        if (!o.out.empty()) {
            json line = metrics::to_json(v);
            line.erase("display");
            line["id"] = id;
            file << line.dump() << '\n';
        }
    }
    if (!o.out.empty()) finish(file, o.out);
    if (per_question.empty()) throw ValidationError("no predictions to evaluate");

    json summary = metrics::to_json(metrics::macro_average(per_question));
    summary["n_questions"] = per_question.size();
    emit_json(summary, o.summary, out);
    return 0;
}

struct TasksOpts {
    std::string in, tasks, assignments, models;
    std::uint64_t seed = 42;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::string item;
    for (char c : text) {
        if (c == ',') {
            items.push_back(std::string(text::trim(item)));
            item.clear();
        } else {
            item += c;
        }
    }
    if (!item.empty()) items.push_back(std::string(text::trim(item)));
    return items;
}

int do_tasks_make(const TasksOpts& o, std::ostream& err) {
    std::vector<preference::EvalSample> samples;
    for (const auto& row : read_json_lines(o.in)) samples.push_back(preference::sample_from_json(row));
    if (samples.empty()) throw ValidationError("no samples");
    std::vector<std::string> models = split_list(o.models);
    if (models.empty()) {
        for (const auto& [m, _] : samples.front().outputs) models.push_back(m);
    }
    const auto assignment = preference::make_assignment(samples, models, o.seed);
    preference::save_assignment(assignment, o.tasks, o.assignments);
    err << json{{"tasks", assignment.tasks.size()}, {"models", models}}.dump() << '\n';
    return 0;
}

struct ServeOpts {
    std::string tasks, assignments, log, host = "127.0.0.1";
    int port = 8080;
};

int do_serve(const ServeOpts& o, std::ostream& err) {
    preference::PreferenceService service(preference::load_tasks(o.tasks), preference::load_slot_maps(o.assignments),
                                          o.log);
    if (service.store().skipped_on_replay() > 0) {
        err << "warning: skipped " << service.store().skipped_on_replay() << " unreadable log line(s)\n";
    }
    preference::PreferenceServer server(service);
    const int port = server.bind(o.host, o.port);
    err << json{{"listening", o.host + ":" + std::to_string(port)},
                {"tasks", service.store().tasks().size()},
                {"rankings", service.store().size()}}
               .dump()
        << std::endl;
    server.listen();
    return 0;
}

struct AggregateOpts {
    std::string in, assignments, out, k;
};

int do_aggregate(const AggregateOpts& o, std::ostream& out) {
    const auto ks = preference::parse_k_list(o.k);
    const auto records = preference::load_rankings(o.in);
    const auto maps = preference::load_slot_maps(o.assignments);
    emit_json(preference::to_json(preference::aggregate(records, maps, ks)), o.out, out);
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Empathy-R1 pipeline: corpus, CoE format, reward model, GRPO, metrics, preference evaluation",
                 "empathy"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    std::uint64_t seed = 42;
    auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "Random seed")->capture_default_str(); };

    IngestOpts ingest;
    auto* s_ingest = app.add_subcommand("ingest", "Validate and anonymize a raw Q&A corpus");
    s_ingest->add_option("--in", ingest.in, "Raw corpus (JSON lines)")->required();
    s_ingest->add_option("--out", ingest.out, "Cleaned corpus (JSON lines)")->required();
    s_ingest->add_flag("--keep-raw", ingest.keep_raw, "Skip anonymization");
    s_ingest->add_flag("--strict", ingest.strict, "Fail on any rejected line");
    add_seed(s_ingest);

    std::string stats_in, stats_out;
    auto* s_stats = app.add_subcommand("stats", "Corpus statistics as one JSON object");
    s_stats->add_option("--in", stats_in, "Corpus (JSON lines)")->required();
    s_stats->add_option("--out", stats_out, "Output file (default: stdout)");
    add_seed(s_stats);

    FilterOpts filter;
    auto* s_filter = app.add_subcommand("filter", "Keep answers longer than --min-chars characters");
    s_filter->add_option("--in", filter.in, "Corpus (JSON lines)")->required();
    s_filter->add_option("--out", filter.out, "Filtered corpus")->required();
    s_filter->add_option("--min-chars", filter.min_chars, "Answers need strictly more characters")
        ->capture_default_str();
    add_seed(s_filter);

    SftOpts sft;
    auto* s_sft = app.add_subcommand("sft-build", "Build single-turn SFT records from reasoning chains");
    s_sft->add_option("--in", sft.in, "Corpus (JSON lines)")->required();
    s_sft->add_option("--coe", sft.coe, "Chains: {id, answer_index, l1, l2, l3, l4} per line")->required();
    s_sft->add_option("--out", sft.out, "SFT records (JSON lines)")->required();
    add_seed(s_sft);

    RewardTrainOpts rtrain;
    auto* s_rtrain = app.add_subcommand("reward-train", "Train the contrastive answer-reward encoder");
    s_rtrain->add_option("--in", rtrain.in, "Training corpus (JSON lines)")->required();
    s_rtrain->add_option("--out", rtrain.out, "Encoder checkpoint")->required();
    s_rtrain->add_option("--margin", rtrain.config.margin, "Triplet margin")->capture_default_str();
    auto* threshold_opt = s_rtrain->add_option("--threshold", rtrain.config.threshold,
                                               "Fixed reward threshold (default: calibrated on the held-out split)");
    s_rtrain->add_option("--epochs", rtrain.config.epochs, "Training epochs")->capture_default_str();
    s_rtrain->add_option("--lr", rtrain.config.learning_rate, "SGD learning rate")->capture_default_str();
    s_rtrain->add_option("--batch-size", rtrain.config.batch_size, "Records per minibatch")->capture_default_str();
    s_rtrain->add_option("--embed-dim", rtrain.config.embed_dim, "Embedding width")->capture_default_str();
    s_rtrain->add_option("--hash-dim", rtrain.config.hash_dim, "Feature hash buckets")->capture_default_str();
    s_rtrain->add_option("--holdout", rtrain.holdout, "Fraction of records held out for calibration")
        ->capture_default_str();
    add_seed(s_rtrain);

    RewardScoreOpts rscore;
    auto* s_rscore = app.add_subcommand("reward-score", "Score {q, a} pairs with a trained encoder");
    s_rscore->add_option("--model", rscore.model, "Encoder checkpoint")->required();
    s_rscore->add_option("--in", rscore.in, "Pairs (JSON lines with q and a)")->required();
    s_rscore->add_option("--out", rscore.out, "Scores (default: stdout)");
    auto* score_threshold_opt =
        s_rscore->add_option("--threshold", rscore.threshold, "Override the checkpoint's threshold");
    add_seed(s_rscore);

    GrpoOpts grpo_opts;
    auto& gc = grpo_opts.config;
    auto* s_grpo = app.add_subcommand("grpo-train", "Train a toy policy with GRPO");
    s_grpo->add_option("--task", grpo_opts.task, "Task name")->capture_default_str();
    s_grpo->add_option("--out", grpo_opts.out, "Trace (JSON lines; default: stdout)");
    s_grpo->add_option("--checkpoint", grpo_opts.checkpoint, "Write the final policy here");
    s_grpo->add_option("--group-size", gc.group_size, "Rollouts per group")->capture_default_str();
    s_grpo->add_option("--clip-eps", gc.clip_eps, "Ratio clip epsilon")->capture_default_str();
    s_grpo->add_option("--kl-beta", gc.kl_beta, "KL penalty coefficient")->capture_default_str();
    s_grpo->add_option("--lr", gc.learning_rate, "Learning rate")->capture_default_str();
    s_grpo->add_option("--steps", gc.steps, "Update steps")->capture_default_str();
    s_grpo->add_option("--temperature", gc.rollout_temperature, "Rollout temperature")->capture_default_str();
    s_grpo->add_option("--max-len", gc.max_len, "Maximum generated tokens")->capture_default_str();
    s_grpo->add_option("--probe", grpo_opts.probe, "Rollouts in the before/after probe")->capture_default_str();
    s_grpo->add_option("--warm-start", grpo_opts.warm_start, "Initial bias on canonical transitions")
        ->capture_default_str();
    add_seed(s_grpo);

    EvaluateOpts eval;
    auto* s_eval = app.add_subcommand("evaluate", "Multi-reference BLEU-1, ROUGE-L, METEOR, Distinct-1, NAvg");
    s_eval->add_option("--hyp,--in", eval.hyp, "Predictions: {id, text} per line")->required();
    s_eval->add_option("--refs", eval.refs, "Reference corpus (JSON lines)")->required();
    s_eval->add_option("--out", eval.out, "Per-question scores (JSON lines)");
    s_eval->add_option("--summary", eval.summary, "Macro average (default: stdout)");
    add_seed(s_eval);

    TasksOpts tasks;
    auto* s_tasks = app.add_subcommand("tasks-make", "Build anonymized ranking tasks and slot maps");
    s_tasks->add_option("--in", tasks.in, "Samples: {sample_id, question, outputs} per line")->required();
    s_tasks->add_option("--tasks,--out", tasks.tasks, "Tasks file (JSON lines)")->required();
    s_tasks->add_option("--assignments", tasks.assignments, "Slot-map file (JSON lines)")->required();
    s_tasks->add_option("--models", tasks.models, "Comma-separated model names (default: first sample's)");
    add_seed(s_tasks);

    ServeOpts serve;
    auto* s_serve = app.add_subcommand("serve", "Run the ranking HTTP service");
    s_serve->add_option("--tasks,--in", serve.tasks, "Tasks file")->required();
    s_serve->add_option("--assignments", serve.assignments, "Slot-map file")->required();
    s_serve->add_option("--log,--out", serve.log, "Rankings log (appended)")->required();
    s_serve->add_option("--port", serve.port, "TCP port (0 = any free port)")->capture_default_str();
    s_serve->add_option("--host", serve.host, "Bind address")->capture_default_str();
    add_seed(s_serve);

    AggregateOpts agg;
    auto* s_agg = app.add_subcommand("aggregate", "Win@K and mean rank from a rankings log");
    s_agg->add_option("--in", agg.in, "Rankings log (JSON lines)")->required();
    s_agg->add_option("--assignments", agg.assignments, "Slot-map file")->required();
    s_agg->add_option("--k", agg.k, "Comma-separated K values (default 1,2)");
    s_agg->add_option("--out", agg.out, "Report (default: stdout)");
    add_seed(s_agg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }

    try {
        if (*s_ingest) {
            log_config(err, "ingest", {{"in", ingest.in}, {"out", ingest.out}, {"keep_raw", ingest.keep_raw},
                                       {"strict", ingest.strict}, {"seed", seed}});
            return do_ingest(ingest, err);
        }
        if (*s_stats) {
            log_config(err, "stats", {{"in", stats_in}, {"out", stats_out}, {"seed", seed}});
            const auto records = load_records(stats_in, err);
            emit_json(corpus::to_json(corpus::compute_stats(records)), stats_out, out);
            return 0;
        }
        if (*s_filter) {
            log_config(err, "filter",
                       {{"in", filter.in}, {"out", filter.out}, {"min_chars", filter.min_chars}, {"seed", seed}});
            return do_filter(filter, err);
        }
        if (*s_sft) {
            log_config(err, "sft-build", {{"in", sft.in}, {"coe", sft.coe}, {"out", sft.out}, {"seed", seed}});
            return do_sft_build(sft, err);
        }
        if (*s_rtrain) {
            auto& c = rtrain.config;
            c.seed = seed;
            rtrain.threshold_given = threshold_opt->count() > 0;
            reward::validate(c);
            log_config(err, "reward-train",
                       {{"in", rtrain.in}, {"out", rtrain.out}, {"margin", c.margin},
                        {"threshold", rtrain.threshold_given ? json(c.threshold) : json("calibrated")},
                        {"epochs", c.epochs}, {"lr", c.learning_rate}, {"batch_size", c.batch_size},
                        {"embed_dim", c.embed_dim}, {"hash_dim", c.hash_dim}, {"ngram_orders", c.ngram_orders},
                        {"holdout", rtrain.holdout}, {"seed", seed}});
            return do_reward_train(rtrain, out, err);
        }
        if (*s_rscore) {
            rscore.threshold_given = score_threshold_opt->count() > 0;
            log_config(err, "reward-score",
                       {{"in", rscore.in}, {"out", rscore.out}, {"model", rscore.model},
                        {"threshold", rscore.threshold_given ? json(rscore.threshold) : json("checkpoint")},
                        {"seed", seed}});
            return do_reward_score(rscore, out, err);
        }
        if (*s_grpo) {
            gc.seed = seed;
            log_config(err, "grpo-train",
                       {{"task", grpo_opts.task}, {"out", grpo_opts.out}, {"checkpoint", grpo_opts.checkpoint},
                        {"group_size", gc.group_size}, {"clip_eps", gc.clip_eps}, {"kl_beta", gc.kl_beta},
                        {"lr", gc.learning_rate}, {"steps", gc.steps}, {"temperature", gc.rollout_temperature},
                        {"max_len", gc.max_len}, {"sigma_floor", gc.sigma_floor}, {"probe", grpo_opts.probe},
                        {"warm_start", grpo_opts.warm_start}, {"seed", seed}});
            return do_grpo_train(grpo_opts, out, err);
        }
        if (*s_eval) {
            log_config(err, "evaluate", {{"hyp", eval.hyp}, {"refs", eval.refs}, {"out", eval.out},
                                         {"summary", eval.summary}, {"seed", seed}});
            return do_evaluate(eval, out, err);
        }
        if (*s_tasks) {
            tasks.seed = seed;
            log_config(err, "tasks-make", {{"in", tasks.in}, {"tasks", tasks.tasks},
                                           {"assignments", tasks.assignments}, {"models", tasks.models},
                                           {"seed", seed}});
            return do_tasks_make(tasks, err);
        }
        if (*s_serve) {
            log_config(err, "serve", {{"tasks", serve.tasks}, {"assignments", serve.assignments},
                                      {"log", serve.log}, {"host", serve.host}, {"port", serve.port},
                                      {"seed", seed}});
            return do_serve(serve, err);
        }
        if (*s_agg) {
            log_config(err, "aggregate", {{"in", agg.in}, {"assignments", agg.assignments},
                                          {"k", agg.k.empty() ? std::string("1,2") : agg.k}, {"out", agg.out},
                                          {"seed", seed}});
            return do_aggregate(agg, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    err << app.help();
    return 1;
}

}  // namespace empathy::cli
