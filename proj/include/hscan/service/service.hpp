#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hscan/core/types.hpp"
#include "hscan/embedding/embedding.hpp"
#include "hscan/llm/provider.hpp"
#include "hscan/llm/screening.hpp"
#include "hscan/ranking/ranking.hpp"
#include "hscan/scanar/scan.hpp"

namespace httplib {
class Server;
}

namespace hscan::service {

/// A second rerank was requested while one is running.
class BusyError : public ConflictError {
public:
    using ConflictError::ConflictError;
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t payload_limit = 64ull * 1024 * 1024;
    std::size_t min_includes_for_rerank = 3;
    /// When set, projects are saved here after every mutation and loaded on start.
    std::optional<std::filesystem::path> data_dir;

    /// HSCAN_HOST, HSCAN_PORT, HSCAN_PAYLOAD_LIMIT (bytes), HSCAN_DATA_DIR.
    void apply_env();
};

struct Dependencies {
    std::shared_ptr<embedding::Backend> embedder;      ///< defaults to the hashing backend
    std::shared_ptr<llm::ChatProvider> llm_provider;   ///< null: llm endpoint answers upstream_failure
    llm::BatchConfig llm_batch;
    std::shared_ptr<Transport> scan_transport;         ///< defaults to HttpTransport
    std::shared_ptr<Clock> scan_clock;                 ///< defaults to SystemClock
    scanar::FeedConfig feed;
    scanar::ScanParams scan_defaults;
};

enum class JobStatus { queued, running, done, failed };
std::string_view to_string(JobStatus s);

class Service {
public:
    Service(ServiceConfig config, Dependencies deps);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Blocks serving requests until stop().
    void listen();
    /// Binds (port 0 picks a free port), serves on a background thread and returns the port.
    int start();
    void stop();
    /// Waits for every background job to finish.
    void wait_for_jobs();

    /// Snapshot of a project, for tests and tools.
    Project project_copy(const std::string& id);

private:
    struct ProjectSlot {
        std::mutex mutex;
        Project project;
        std::optional<ranking::Corpus> corpus;
        std::atomic<bool> reranking{false};
    };

    struct Job {
        std::string id;
        std::string kind;
        std::string project_id;
        JobStatus status = JobStatus::queued;
        std::size_t done = 0;
        std::size_t total = 0;
        std::string error;
        nlohmann::json result;
    };

    struct ScanSlot {
        std::string id;
        JobStatus status = JobStatus::queued;
        scanar::ScanProgress progress;
        std::optional<scanar::ScanResult> result;
        std::string error;
    };

    void routes();
    std::shared_ptr<ProjectSlot> slot(const std::string& id);
    std::string add_project(Project project);
    void persist(const Project& project);
    void launch(std::function<void()> fn);

    ServiceConfig config_;
    Dependencies deps_;
    std::unique_ptr<httplib::Server> server_;
    std::thread server_thread_;

    std::mutex registry_mutex_;
    std::map<std::string, std::shared_ptr<ProjectSlot>> projects_;
    std::uint64_t next_project_ = 1;

    std::mutex jobs_mutex_;
    std::map<std::string, Job> jobs_;
    std::map<std::string, ScanSlot> scans_;
    std::uint64_t next_job_ = 1;
    std::uint64_t next_scan_ = 1;
    std::vector<std::thread> workers_;

    std::atomic<std::uint64_t> rng_counter_{0};
};

}  // namespace hscan::service
