#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "facealign/image.hpp"
#include "facealign/pipeline.hpp"

namespace facealign {

using Clock = std::function<std::chrono::system_clock::time_point()>;

enum class TaskStatus { pending, leased, done };

std::string_view to_string(TaskStatus s);

struct Lease {
    std::string client;
    std::chrono::system_clock::time_point expires;
};

struct AnnotationTask {
    std::string id;          // file name, unique across buckets
    std::string image_path;  // relative to the run root, e.g. "fnf/a.png"
    FailureBucket bucket = FailureBucket::fnf;
    TaskStatus status = TaskStatus::pending;
    std::optional<Lease> lease;
    std::optional<EyePair> annotation;  // set once done
    std::optional<Outcome> result;      // manual_success or manual_failed
    std::size_t order = 0;              // enqueue sequence
};

struct Annotation {
    std::string task_id;
    Point2 left;
    Point2 right;
    std::string client;
};

struct QueueProgress {
    std::size_t pending = 0;
    std::size_t leased = 0;
    std::size_t done = 0;
    std::size_t manual_success = 0;
    std::size_t manual_failed = 0;
};

/// Annotation queue over the bucket folders of one run root. All mutations
/// take one lock and are journalled to annotations.jsonl before returning.
/// Leases live only in memory.
class AnnotationQueue {
public:
    static constexpr std::chrono::seconds kDefaultLease{600};

    /// Replays the journal if present. Throws Error(not_found) when the run
    /// root does not exist.
    explicit AnnotationQueue(std::filesystem::path run_root, std::chrono::seconds lease = kDefaultLease,
                             Clock clock = {});

    const std::filesystem::path& run_root() const { return run_root_; }
    std::chrono::seconds lease_duration() const { return lease_; }

    /// One pending task per bucket image not already known. Returns the
    /// number of new tasks.
    std::size_t enqueue_from_buckets();

    /// Leases the oldest pending task (expired leases count as pending).
    std::optional<AnnotationTask> next_task(const std::string& client);

    std::optional<AnnotationTask> find(const std::string& id) const;

    /// Throws Error(not_found) for an unknown id and Error(stale_lease)
    /// unless `client` holds an unexpired lease on a task that is not done.
    void check_lease(const std::string& id, const std::string& client) const;

    /// Marks the task done with its clicked pair and outcome. Same checks as
    /// check_lease.
    void complete(const Annotation& a, Outcome result);

    QueueProgress progress() const;
    std::size_t size() const;

private:
    AnnotationTask& leased_locked(const std::string& id, const std::string& client) const;
    void expire_locked(std::chrono::system_clock::time_point now) const;
    void replay();
    std::filesystem::path journal_path() const { return run_root_ / "annotations.jsonl"; }

    std::filesystem::path run_root_;
    std::chrono::seconds lease_;
    Clock clock_;
    mutable std::mutex mu_;
    mutable std::map<std::string, AnnotationTask> tasks_;
    std::size_t next_order_ = 0;
};

/// Queue plus the resume step: validates clicks, runs
/// resume_with_manual_eyes, writes out/ and appends to the manifest.
class AnnotationService {
public:
    AnnotationService(AnnotationQueue& queue, PipelineConfig config);

    AnnotationQueue& queue() { return queue_; }
    const PipelineConfig& config() const { return config_; }

    /// Dimensions of a task's image.
    Size image_size_of(const AnnotationTask& task) const;

    /// Throws Error(not_found), Error(stale_lease), Error(invalid_annotation)
    /// for out-of-bounds or coincident points. A rejected submission leaves
    /// the lease untouched.
    PipelineResult submit(const Annotation& a);

private:
    AnnotationQueue& queue_;
    PipelineConfig config_;
    std::mutex submit_mu_;
};

}  // namespace facealign
