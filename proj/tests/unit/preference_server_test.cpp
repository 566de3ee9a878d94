// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>

#include "empathy/error.hpp"
#include "empathy/preference_server.hpp"

namespace empathy::preference {
namespace {

using nlohmann::json;

Assignment xyz_assignment(std::size_t n) {
    const std::vector<std::string> models = {"X", "Y", "Z"};
    std::vector<EvalSample> samples;
    for (std::size_t i = 0; i < n; ++i) {
        samples.push_back({"s" + std::to_string(i), "q" + std::to_string(i), {{"X", "x"}, {"Y", "y"}, {"Z", "z"}}});
    }
    return make_assignment(samples, models, 3);
}

TEST(ParseKList, Values) {
    EXPECT_EQ(parse_k_list(""), (std::vector<int>{1, 2}));
    EXPECT_EQ(parse_k_list("1,3"), (std::vector<int>{1, 3}));
    EXPECT_THROW(parse_k_list("0"), ValidationError);
    EXPECT_THROW(parse_k_list("a"), ValidationError);
}

TEST(PreferenceService, RequestFlowWithoutHttp) {
    const auto a = xyz_assignment(2);
    PreferenceService svc(a.tasks, a.slot_maps);
    EXPECT_EQ(svc.next_task("").status, 400);
    const auto next = svc.next_task("ann");
    ASSERT_EQ(next.status, 200);
    EXPECT_EQ(next.body.at("task_id"), a.tasks[0].task_id);
    EXPECT_EQ(next.body.at("progress").at("total"), 2);

    const json body = {{"task_id", a.tasks[0].task_id}, {"annotator_id", "ann"}, {"ordering", {"A", "B", "C"}}};
    EXPECT_EQ(svc.submit(body.dump()).status, 201);
    EXPECT_EQ(svc.submit(body.dump()).status, 409);
    EXPECT_EQ(svc.submit("{").status, 400);
    EXPECT_EQ(svc.submit(json{{"task_id", "nope"}, {"annotator_id", "ann"}, {"ordering", {"A"}}}.dump()).status, 400);
    EXPECT_EQ(svc.report("x").status, 400);
    EXPECT_EQ(svc.report("").body.at("n_rankings"), 1);
    EXPECT_EQ(svc.health().body.at("rankings"), 1);
}

TEST(PreferenceService, MismatchedSlotMapsAreRejected) {
    auto a = xyz_assignment(2);
    a.slot_maps.pop_back();
    EXPECT_THROW(PreferenceService(a.tasks, a.slot_maps), ValidationError);
}

class ServerTest : public ::testing::Test {
protected:
    void SetUp() override {
        assignment_ = xyz_assignment(2);
        service_ = std::make_unique<PreferenceService>(assignment_.tasks, assignment_.slot_maps);
        server_ = std::make_unique<PreferenceServer>(*service_);
        port_ = server_->bind("127.0.0.1", 0);
        thread_ = std::thread([this] { server_->listen(); });
        server_->wait_until_ready();
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    }

    void TearDown() override {
        server_->stop();
        thread_.join();
    }

    httplib::Result post(const json& body) {
        return client_->Post("/api/rankings", body.dump(), "application/json");
    }

    Assignment assignment_;
    std::unique_ptr<PreferenceService> service_;
    std::unique_ptr<PreferenceServer> server_;
    std::unique_ptr<httplib::Client> client_;
    std::thread thread_;
    int port_ = 0;
};

TEST_F(ServerTest, HealthReportsCounts) {
    auto res = client_->Get("/api/health");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    const auto j = json::parse(res->body);
    EXPECT_EQ(j.at("status"), "ok");
    EXPECT_EQ(j.at("tasks"), 2);
}

TEST_F(ServerTest, FullAnnotationSession) {
    auto res = client_->Get("/api/tasks/next?annotator=ann");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200);
    auto task = json::parse(res->body);
    EXPECT_FALSE(task.contains("models"));
    EXPECT_EQ(task.at("candidates").size(), 3u);

    res = post({{"task_id", task.at("task_id")}, {"annotator_id", "ann"}, {"ordering", {"A", "A", "B"}}});
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);

    res = post({{"task_id", task.at("task_id")}, {"annotator_id", "ann"}, {"ordering", {"C", "A", "B"}}});
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 201);

    res = post({{"task_id", task.at("task_id")}, {"annotator_id", "ann"}, {"ordering", {"A", "B", "C"}}});
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 409);

    res = client_->Get("/api/tasks/next?annotator=ann");
    task = json::parse(res->body);
    EXPECT_EQ(task.at("task_id"), assignment_.tasks[1].task_id);
    EXPECT_EQ(task.at("progress").at("done"), 1);
    res = post({{"task_id", task.at("task_id")}, {"annotator_id", "ann"}, {"ordering", {"B", "A", "C"}}});
    EXPECT_EQ(res->status, 201);

    res = client_->Get("/api/tasks/next?annotator=ann");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 404);
    EXPECT_TRUE(json::parse(res->body).at("done").get<bool>());

    res = client_->Get("/api/report?k=1,2,3");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200);
    const auto report = json::parse(res->body);
    EXPECT_EQ(report.at("n_rankings"), 2);
    double total_win1 = 0.0;
    for (const auto& [model, m] : report.at("models").items()) {
        total_win1 += m.at("win_at").at("1").get<double>();
        EXPECT_DOUBLE_EQ(m.at("win_at").at("3").get<double>(), 100.0);
    }
    EXPECT_DOUBLE_EQ(total_win1, 100.0);
}

TEST_F(ServerTest, BadRequests) {
    auto res = client_->Get("/api/tasks/next");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    res = client_->Post("/api/rankings", "not json", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    res = client_->Get("/api/report?k=0");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
}

TEST_F(ServerTest, CorsPreflight) {
    auto res = client_->Options("/api/rankings");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 204);
    EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
    res = client_->Get("/api/health");
    EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
}

}  // namespace
}  // namespace empathy::preference
