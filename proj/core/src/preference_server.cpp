// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#include "empathy/preference_server.hpp"

#include <httplib.h>

#include <sstream>

#include "empathy/error.hpp"

namespace empathy::preference {

using nlohmann::json;

std::vector<int> parse_k_list(const std::string& text) {
    if (text.empty()) return {1, 2};
    std::vector<int> ks;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        int k = 0;
        try {
            k = std::stoi(item, &used);
        } catch (const std::exception&) {
            throw ValidationError("bad K value '" + item + "'");
        }
        if (used != item.size() || k < 1) throw ValidationError("bad K value '" + item + "'");
        ks.push_back(k);
    }
    if (ks.empty()) throw ValidationError("empty K list");
    return ks;
}

PreferenceService::PreferenceService(std::vector<RankingTask> tasks, std::vector<SlotMap> slot_maps,
                                     std::filesystem::path log_path)
    : store_(std::move(tasks), std::move(log_path)), slot_maps_(std::move(slot_maps)) {
    for (const auto& t : store_.tasks()) {
        auto it = std::find_if(slot_maps_.begin(), slot_maps_.end(),
                               [&](const SlotMap& m) { return m.task_id == t.task_id; });
        if (it == slot_maps_.end()) throw ValidationError("task '" + t.task_id + "' has no slot map");
        if (it->models.size() != t.candidates.size()) {
            throw ValidationError("task '" + t.task_id + "' and its slot map disagree on slot count");
        }
    }
}

PreferenceService::Response PreferenceService::next_task(const std::string& annotator_id) const {
    if (annotator_id.empty()) return {400, {{"error", "missing annotator"}}};
    const RankingTask* task = store_.next_task(annotator_id);
    if (task == nullptr) return {404, {{"error", "no unranked tasks"}, {"done", true}}};
    json body = to_json(*task);
    body["progress"] = {{"done", store_.completed_by(annotator_id)}, {"total", store_.tasks().size()}};
    return {200, std::move(body)};
}

PreferenceService::Response PreferenceService::submit(const std::string& body) {
    RankingRecord record;
    try {
        const json j = json::parse(body);
        record.task_id = j.at("task_id").get<std::string>();
        record.annotator_id = j.at("annotator_id").get<std::string>();
        record.ordering = j.at("ordering").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        return {400, {{"error", std::string("malformed request: ") + e.what()}}};
    }
    const SubmitResult result = store_.record(std::move(record));
    switch (result.status) {
        case SubmitStatus::accepted: return {201, {{"status", "recorded"}}};
        case SubmitStatus::duplicate: return {409, {{"error", result.message}}};
        case SubmitStatus::unknown_task:
        case SubmitStatus::malformed: return {400, {{"error", result.message}}};
    }
    return {500, {{"error", "unreachable"}}};
}

PreferenceService::Response PreferenceService::report(const std::string& k_param) const {
    std::vector<int> ks;
    try {
        ks = parse_k_list(k_param);
    } catch (const ValidationError& e) {
        return {400, {{"error", e.what()}}};
    }
    const auto snap = store_.snapshot();
    const AggregateReport rep = aggregate(*snap, slot_maps_, ks);
    return {200, to_json(rep)};
}

PreferenceService::Response PreferenceService::health() const {
    return {200, {{"status", "ok"}, {"tasks", store_.tasks().size()}, {"rankings", store_.size()}}};
}

// ---- HTTP ---------------------------------------------------------------------------

struct PreferenceServer::Impl {
    PreferenceService& service;
    httplib::Server server;
};

namespace {

void reply(httplib::Response& res, const PreferenceService::Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

}  // namespace

PreferenceServer::PreferenceServer(PreferenceService& service) : impl_(new Impl{service, {}}) {
    auto& srv = impl_->server;
    auto& svc = impl_->service;
    srv.set_default_headers({
        {"Access-Control-Allow-Origin", "*"},
        {"Access-Control-Allow-Headers", "Content-Type"},
        {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
    });
    srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    srv.Get("/api/health", [&svc](const httplib::Request&, httplib::Response& res) { reply(res, svc.health()); });
    srv.Get("/api/tasks/next", [&svc](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc.next_task(req.get_param_value("annotator")));
    });
    srv.Post("/api/rankings", [&svc](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc.submit(req.body));
    });
    srv.Get("/api/report", [&svc](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc.report(req.get_param_value("k")));
    });
    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        res.status = 500;
        res.set_content(json{{"error", what}}.dump(), "application/json");
    });
}

PreferenceServer::~PreferenceServer() {
    stop();
}

int PreferenceServer::bind(const std::string& host, int port) {
    auto& srv = impl_->server;
    if (port == 0) {
        const int bound = srv.bind_to_any_port(host);
        if (bound < 0) throw IoError("cannot bind " + host);
        return bound;
    }
    if (!srv.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void PreferenceServer::listen() {
    impl_->server.listen_after_bind();
}

void PreferenceServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool PreferenceServer::running() const {
    return impl_->server.is_running();
}

void PreferenceServer::wait_until_ready() const {
    impl_->server.wait_until_ready();
}

}  // namespace empathy::preference
