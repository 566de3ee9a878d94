// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#include "empathy/preference.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numeric>

#include <unistd.h>

#include "empathy/error.hpp"
#include "empathy/random.hpp"

namespace empathy::preference {

using nlohmann::json;

namespace {

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::array<char, 32> buf{};
    std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf.data();
}

std::optional<std::size_t> slot_index(const std::string& label) {
    if (label.empty()) return std::nullopt;
    std::size_t value = 0;
    for (char c : label) {
        if (c < 'A' || c > 'Z') return std::nullopt;
        value = value * 26 + static_cast<std::size_t>(c - 'A' + 1);
    }
    return value - 1;
}

template <typename T, typename Parse>
std::vector<T> load_json_lines(const std::filesystem::path& path, Parse parse) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<T> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(parse(json::parse(line)));
        } catch (const json::exception& e) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

// A crash mid-append leaves a final line without its newline. Cut it off so
// the next append starts on a fresh line instead of extending the fragment.
void truncate_torn_tail(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    if (data.empty() || data.back() == '\n') return;
    const auto last = data.find_last_of('\n');
    const std::uintmax_t keep = last == std::string::npos ? 0 : last + 1;
    std::error_code ec;
    std::filesystem::resize_file(path, keep, ec);
    if (ec) throw IoError("cannot truncate " + path.string() + ": " + ec.message());
}

}  // namespace

std::string slot_label(std::size_t index) {
    std::string out;
    std::size_t n = index + 1;
    while (n > 0) {
        --n;
        out.insert(out.begin(), static_cast<char>('A' + n % 26));
        n /= 26;
    }
    return out;
}

// ---- Tasks ---------------------------------------------------------------------------

Assignment make_assignment(std::span<const EvalSample> samples, std::span<const std::string> models,
                           std::uint64_t seed) {
    if (models.size() < 2) throw ValidationError("ranking needs at least two models");
    std::set<std::string> model_set(models.begin(), models.end());
    if (model_set.size() != models.size()) throw ValidationError("model names must be distinct");

    Assignment out;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const EvalSample& s = samples[i];
        if (!seen.insert(s.sample_id).second) throw ValidationError("duplicate sample id '" + s.sample_id + "'");
        for (const auto& m : models) {
            if (!s.outputs.contains(m)) {
                throw ValidationError("sample '" + s.sample_id + "' has no output for model '" + m + "'");
            }
        }
        for (const auto& [m, _] : s.outputs) {
            if (!model_set.contains(m)) {
                throw ValidationError("sample '" + s.sample_id + "' has an output for unknown model '" + m + "'");
            }
        }

        RankingTask task;
        std::array<char, 24> id{};
        std::snprintf(id.data(), id.size(), "t%05zu", i);
        task.task_id = id.data();
        task.sample_id = s.sample_id;
        task.question_text = s.question;
        task.permutation_seed = splitmix64(seed ^ splitmix64(i));

        std::vector<std::string> order(models.begin(), models.end());
        Rng rng(task.permutation_seed);
        shuffle(std::span(order), rng);

        SlotMap map{task.task_id, order};
        for (std::size_t k = 0; k < order.size(); ++k) {
            task.candidates.push_back({slot_label(k), s.outputs.at(order[k])});
        }
        out.tasks.push_back(std::move(task));
        out.slot_maps.push_back(std::move(map));
    }
    return out;
}

json to_json(const RankingTask& t) {
    json candidates = json::array();
    for (const auto& c : t.candidates) candidates.push_back({{"slot", c.slot}, {"text", c.text}});
    return {
        {"task_id", t.task_id},
        {"sample_id", t.sample_id},
        {"question_text", t.question_text},
        {"candidates", std::move(candidates)},
        {"permutation_seed", t.permutation_seed},
    };
}

RankingTask task_from_json(const json& j) {
    RankingTask t;
    t.task_id = j.at("task_id").get<std::string>();
    t.sample_id = j.at("sample_id").get<std::string>();
    t.question_text = j.at("question_text").get<std::string>();
    t.permutation_seed = j.value("permutation_seed", std::uint64_t{0});
    for (const auto& c : j.at("candidates")) {
        t.candidates.push_back({c.at("slot").get<std::string>(), c.at("text").get<std::string>()});
    }
    for (std::size_t k = 0; k < t.candidates.size(); ++k) {
        if (t.candidates[k].slot != slot_label(k)) {
            throw ValidationError("task '" + t.task_id + "' has slot '" + t.candidates[k].slot + "' at position " +
                                  std::to_string(k));
        }
    }
    return t;
}

json to_json(const SlotMap& m) {
    json slots = json::object();
    for (std::size_t k = 0; k < m.models.size(); ++k) slots[slot_label(k)] = m.models[k];
    return {{"task_id", m.task_id}, {"slots", std::move(slots)}};
}

SlotMap slot_map_from_json(const json& j) {
    SlotMap m;
    m.task_id = j.at("task_id").get<std::string>();
    const auto& slots = j.at("slots");
    m.models.resize(slots.size());
    for (const auto& [label, model] : slots.items()) {
        const auto idx = slot_index(label);
        if (!idx || *idx >= m.models.size()) throw ValidationError("bad slot label '" + label + "'");
        m.models[*idx] = model.get<std::string>();
    }
    return m;
}

EvalSample sample_from_json(const json& j) {
    EvalSample s;
    s.sample_id = j.at("sample_id").get<std::string>();
    s.question = j.value("question", std::string{});
    for (const auto& [model, text] : j.at("outputs").items()) s.outputs[model] = text.get<std::string>();
    return s;
}

std::vector<RankingTask> load_tasks(const std::filesystem::path& path) {
    return load_json_lines<RankingTask>(path, task_from_json);
}

std::vector<SlotMap> load_slot_maps(const std::filesystem::path& path) {
    return load_json_lines<SlotMap>(path, slot_map_from_json);
}

void save_assignment(const Assignment& a, const std::filesystem::path& tasks_path,
                     const std::filesystem::path& slot_map_path) {
    std::ofstream tasks(tasks_path, std::ios::trunc);
    if (!tasks) throw IoError("cannot open " + tasks_path.string() + " for writing");
    for (const auto& t : a.tasks) tasks << to_json(t).dump() << '\n';
    std::ofstream maps(slot_map_path, std::ios::trunc);
    if (!maps) throw IoError("cannot open " + slot_map_path.string() + " for writing");
    for (const auto& m : a.slot_maps) maps << to_json(m).dump() << '\n';
    if (!tasks || !maps) throw IoError("write failure while saving assignment");
}

// ---- Rankings --------------------------------------------------------------------------

json to_json(const RankingRecord& r) {
    return {
        {"task_id", r.task_id},
        {"annotator_id", r.annotator_id},
        {"ordering", r.ordering},
        {"submitted_at", r.submitted_at},
    };
}

RankingRecord ranking_from_json(const json& j) {
    RankingRecord r;
    r.task_id = j.at("task_id").get<std::string>();
    r.annotator_id = j.at("annotator_id").get<std::string>();
    r.ordering = j.at("ordering").get<std::vector<std::string>>();
    r.submitted_at = j.value("submitted_at", std::string{});
    return r;
}

std::optional<std::string> check_permutation(std::span<const std::string> ordering, std::size_t n_slots) {
    if (ordering.size() != n_slots) {
        return "ordering has " + std::to_string(ordering.size()) + " entries, task has " + std::to_string(n_slots) +
               " slots";
    }
    std::vector<bool> used(n_slots, false);
    for (const auto& label : ordering) {
        const auto idx = slot_index(label);
        if (!idx || *idx >= n_slots) return "unknown slot '" + label + "'";
        if (used[*idx]) return "slot '" + label + "' ranked twice";
        used[*idx] = true;
    }
    return std::nullopt;
}

RankingStore::RankingStore(std::vector<RankingTask> tasks, std::filesystem::path log_path)
    : tasks_(std::move(tasks)), log_path_(std::move(log_path)) {
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        if (!task_index_.emplace(tasks_[i].task_id, i).second) {
            throw ValidationError("duplicate task id '" + tasks_[i].task_id + "'");
        }
    }
    auto records = std::make_shared<std::vector<RankingRecord>>();
    if (!log_path_.empty() && std::filesystem::exists(log_path_)) {
        truncate_torn_tail(log_path_);
        std::ifstream in(log_path_);
        if (!in) throw IoError("cannot open " + log_path_.string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                RankingRecord r = ranking_from_json(json::parse(line));
                const RankingTask* task = find_task(r.task_id);
                if (task == nullptr || check_permutation(r.ordering, task->candidates.size()) ||
                    !done_.emplace(r.task_id, r.annotator_id).second) {
                    ++skipped_;
                    continue;
                }
                records->push_back(std::move(r));
            } catch (const json::exception&) {
                ++skipped_;
            }
        }
    }
    records_ = std::move(records);
}

const RankingTask* RankingStore::find_task(const std::string& task_id) const {
    auto it = task_index_.find(task_id);
    return it == task_index_.end() ? nullptr : &tasks_[it->second];
}

RankingStore::Snapshot RankingStore::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return records_;
}

SubmitResult RankingStore::record(RankingRecord r) {
    std::lock_guard writer(write_mutex_);
    const RankingTask* task = find_task(r.task_id);
    if (task == nullptr) return {SubmitStatus::unknown_task, "unknown task '" + r.task_id + "'"};
    if (r.annotator_id.empty()) return {SubmitStatus::malformed, "annotator id is empty"};
    if (auto err = check_permutation(r.ordering, task->candidates.size())) {
        return {SubmitStatus::malformed, *err};
    }
    if (done_.contains({r.task_id, r.annotator_id})) {
        return {SubmitStatus::duplicate,
                "annotator '" + r.annotator_id + "' already ranked task '" + r.task_id + "'"};
    }
    if (r.submitted_at.empty()) r.submitted_at = now_iso8601();

    if (!log_path_.empty()) {
        const std::string line = to_json(r).dump() + "\n";
        std::FILE* f = std::fopen(log_path_.c_str(), "a");
        if (f == nullptr) throw IoError("cannot open " + log_path_.string() + " for appending");
        const bool written = std::fwrite(line.data(), 1, line.size(), f) == line.size() && std::fflush(f) == 0 &&
                             ::fsync(::fileno(f)) == 0;
        std::fclose(f);
        if (!written) throw IoError("append to " + log_path_.string() + " failed");
    }

    done_.emplace(r.task_id, r.annotator_id);
    auto next = std::make_shared<std::vector<RankingRecord>>(*snapshot());
    next->push_back(std::move(r));
    std::lock_guard lock(snapshot_mutex_);
    records_ = std::move(next);
    return {SubmitStatus::accepted, "recorded"};
}

const RankingTask* RankingStore::next_task(const std::string& annotator_id) const {
    const auto snap = snapshot();
    std::set<std::string> done;
    for (const auto& r : *snap) {
        if (r.annotator_id == annotator_id) done.insert(r.task_id);
    }
    for (const auto& t : tasks_) {
        if (!done.contains(t.task_id)) return &t;
    }
    return nullptr;
}

std::size_t RankingStore::completed_by(const std::string& annotator_id) const {
    const auto snap = snapshot();
    return static_cast<std::size_t>(std::count_if(snap->begin(), snap->end(), [&](const RankingRecord& r) {
        return r.annotator_id == annotator_id;
    }));
}

std::vector<RankingRecord> load_rankings(const std::filesystem::path& path) {
    return load_json_lines<RankingRecord>(path, ranking_from_json);
}

// ---- Aggregation ---------------------------------------------------------------------------

AggregateReport aggregate(std::span<const RankingRecord> records, std::span<const SlotMap> slot_maps,
                          std::span<const int> k_values) {
    AggregateReport report;
    report.k_values.assign(k_values.begin(), k_values.end());
    std::sort(report.k_values.begin(), report.k_values.end());
    report.k_values.erase(std::unique(report.k_values.begin(), report.k_values.end()), report.k_values.end());
    for (int k : report.k_values) {
        if (k < 1) throw ValidationError("Win@K needs K >= 1");
    }

    std::map<std::string, const SlotMap*> maps;
    for (const auto& m : slot_maps) {
        maps[m.task_id] = &m;
        for (const auto& model : m.models) report.models.try_emplace(model);
    }
    report.n_models = report.models.size();

    for (const auto& r : records) {
        auto it = maps.find(r.task_id);
        if (it == maps.end()) throw ValidationError("ranking references unknown task '" + r.task_id + "'");
        const SlotMap& map = *it->second;
        if (auto err = check_permutation(r.ordering, map.models.size())) {
            throw ValidationError("ranking of task '" + r.task_id + "' by '" + r.annotator_id + "': " + *err);
        }
        for (std::size_t pos = 0; pos < r.ordering.size(); ++pos) {
            const std::size_t rank = pos + 1;
            ModelReport& m = report.models[map.models[*slot_index(r.ordering[pos])]];
            ++m.n_rankings;
            m.rank_sum += rank;
            for (int k : report.k_values) {
                if (rank <= static_cast<std::size_t>(k)) ++m.top_count[k];
            }
        }
        ++report.n_rankings;
    }

    for (auto& [_, m] : report.models) {
        for (int k : report.k_values) {
            const std::size_t top = m.top_count[k];
            m.win_at[k] = m.n_rankings > 0 ? 100.0 * static_cast<double>(top) / static_cast<double>(m.n_rankings) : 0.0;
        }
        m.mean_rank = m.n_rankings > 0 ? static_cast<double>(m.rank_sum) / static_cast<double>(m.n_rankings) : 0.0;
    }
    return report;
}

json to_json(const AggregateReport& report) {
    auto round2 = [](double x) { return std::round(x * 100.0) / 100.0; };
    json models = json::object();
    json display = json::object();
    for (const auto& [name, m] : report.models) {
        json win = json::object();
        json win_display = json::object();
        for (const auto& [k, v] : m.win_at) {
            win[std::to_string(k)] = v;
            win_display[std::to_string(k)] = round2(v);
        }
        models[name] = {{"win_at", win}, {"mean_rank", m.mean_rank}, {"n_rankings", m.n_rankings}};
        display[name] = {{"win_at", win_display}, {"mean_rank", round2(m.mean_rank)}};
    }
    return {
        {"k_values", report.k_values},
        {"n_rankings", report.n_rankings},
        {"n_models", report.n_models},
        {"models", std::move(models)},
        {"display", std::move(display)},
    };
}

std::vector<RankSummary> summarize(const AggregateReport& report) {
    std::vector<RankSummary> rows;
    for (const auto& [name, m] : report.models) rows.push_back({name, m.win_at, m.mean_rank});
    return rows;
}

InvariantCheck check_rank_invariants(std::span<const RankSummary> rows, std::size_t n_models, double slack) {
    InvariantCheck out;
    auto fail = [&](std::string msg) {
        out.ok = false;
        out.violations.push_back(std::move(msg));
    };
    if (rows.size() != n_models) {
        fail("expected " + std::to_string(n_models) + " models, got " + std::to_string(rows.size()));
    }
    const double n = static_cast<double>(n_models);

    std::set<int> ks;
    for (const auto& r : rows) {
        for (const auto& [k, _] : r.win_at) ks.insert(k);
    }
    for (int k : ks) {
        double total = 0.0;
        for (const auto& r : rows) {
            auto it = r.win_at.find(k);
            if (it != r.win_at.end()) total += it->second;
        }
        const double expected = 100.0 * std::min(static_cast<double>(k), n);
        if (std::abs(total - expected) > slack) {
            fail("sum Win@" + std::to_string(k) + " = " + std::to_string(total) + ", expected " +
                 std::to_string(expected));
        }
    }

    double mr_total = 0.0;
    for (const auto& r : rows) mr_total += r.mean_rank;
    const double mr_expected = n * (n + 1.0) / 2.0;
    if (std::abs(mr_total - mr_expected) > slack) {
        fail("sum MR = " + std::to_string(mr_total) + ", expected " + std::to_string(mr_expected));
    }

    for (const auto& r : rows) {
        double prev = -1.0;
        for (const auto& [k, v] : r.win_at) {
            if (v + 1e-9 < prev) fail(r.model + ": Win@" + std::to_string(k) + " decreases");
            prev = v;
        }
        if (r.mean_rank < 1.0 - 1e-9 || r.mean_rank > n + 1e-9) {
            fail(r.model + ": MR " + std::to_string(r.mean_rank) + " outside [1, n]");
        }
    }
    return out;
}

}  // namespace empathy::preference
