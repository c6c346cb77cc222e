#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "qualnet/baseline.hpp"
#include "qualnet/error.hpp"
#include "qualnet/model.hpp"
#include "qualnet/network.hpp"
#include "qualnet/pipeline.hpp"
#include "qualnet/provider.hpp"

namespace qualnet::service {

enum class ApiCode { NotFound, InvalidInput, Conflict, ProviderUnavailable, Internal };

std::string to_string(ApiCode code);
int http_status(ApiCode code);
ApiCode api_code(ErrorKind kind);

struct ApiError {
    ApiCode code = ApiCode::Internal;
    std::string message;
    nlohmann::json detail;  // null when absent

    nlohmann::json to_json() const;
};

struct Request {
    std::string method;  // "GET", "POST", ...
    std::string path;    // without query string
    std::map<std::string, std::string> query;
    std::string body;
    std::string content_type;
};

struct Response {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";

    nlohmann::json json() const { return nlohmann::json::parse(body); }
};

struct WorkspaceOptions {
    std::filesystem::path data_dir;
    provider::ProviderBundle providers;
    pipeline::PipelineConfig pipeline;
    std::vector<baseline::CueRule> cue_rules = baseline::default_cue_rules();
    std::size_t workers = 2;
};

enum class JobState { Pending, Running, Done, Failed };
std::string to_string(JobState state);

struct JobStatus {
    std::string job_id;
    std::string project_id;
    JobState state = JobState::Pending;
    std::optional<pipeline::Stage> stage;  // last completed stage
    std::size_t completed_stages = 0;
    std::size_t total_stages = 0;
    std::optional<pipeline::RunReport> report;
    std::optional<ApiError> error;

    nlohmann::json to_json() const;
};

// Project workspace behind the REST API. Every project lives in memory and
// in `<data_dir>/<id>.qualnet.json`; mutations are serialized per project
// and written through before they are acknowledged. Pipeline runs execute on
// a snapshot in a bounded worker pool and commit stage by stage; a stage
// whose base revision is no longer current fails the job with a conflict.
class Workspace {
public:
    explicit Workspace(WorkspaceOptions options);
    ~Workspace();
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;

    Response handle(const Request& request);

    // Blocks until the job leaves pending/running.
    JobStatus wait_for_job(const std::string& job_id);

private:
    struct Slot {
        std::mutex mutex;
        Project project;
        network::EmbeddingCache cache;
    };
    struct Job {
        JobStatus status;
        std::set<pipeline::Stage> stages;
    };

    std::shared_ptr<Slot> slot(const std::string& project_id);
    Project snapshot(const std::string& project_id);
    void persist(const Project& project) const;
    std::filesystem::path file_for(const std::string& project_id) const;

    template <class Fn>
    nlohmann::json mutate(const std::string& project_id, std::optional<std::uint64_t> expected,
                          Fn&& fn);

    Response route(const Request& request);
    void worker_loop();
    void run_job(const std::string& job_id);

    WorkspaceOptions options_;
    std::mutex projects_mutex_;
    std::map<std::string, std::shared_ptr<Slot>> projects_;
    std::uint64_t next_project_ = 1;

    std::mutex jobs_mutex_;
    std::condition_variable jobs_cv_;
    std::map<std::string, Job> jobs_;
    std::deque<std::string> queue_;
    std::uint64_t next_job_ = 1;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

}  // namespace qualnet::service
