// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "empathy/preference.hpp"

namespace empathy::preference {

/// HTTP-independent request handling for the annotation service.
class PreferenceService {
public:
    PreferenceService(std::vector<RankingTask> tasks, std::vector<SlotMap> slot_maps,
                      std::filesystem::path log_path = {});

    struct Response {
        int status = 200;
        nlohmann::json body;
    };

    /// GET /api/tasks/next?annotator=ID
    [[nodiscard]] Response next_task(const std::string& annotator_id) const;
    /// POST /api/rankings
    Response submit(const std::string& body);
    /// GET /api/report?k=1,2
    [[nodiscard]] Response report(const std::string& k_param) const;
    /// GET /api/health
    [[nodiscard]] Response health() const;

    [[nodiscard]] const RankingStore& store() const { return store_; }

private:
    RankingStore store_;
    std::vector<SlotMap> slot_maps_;
};

/// Parses "1,2,5" into {1, 2, 5}. Empty input yields {1, 2}.
std::vector<int> parse_k_list(const std::string& text);

/// cpp-httplib front end. Requests are served on a thread pool; the service
/// serializes ranking appends internally.
class PreferenceServer {
public:
    explicit PreferenceServer(PreferenceService& service);
    ~PreferenceServer();
    PreferenceServer(const PreferenceServer&) = delete;
    PreferenceServer& operator=(const PreferenceServer&) = delete;

    /// Binds `host:port`; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks until stop() is called.
    void listen();
    void stop();
    [[nodiscard]] bool running() const;
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace empathy::preference
