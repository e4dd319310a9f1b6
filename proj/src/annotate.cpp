#include "facealign/annotate.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "facealign/error.hpp"
#include "facealign/image_io.hpp"
#include "facealign/manifest.hpp"

namespace facealign {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(TaskStatus s) {
    switch (s) {
        case TaskStatus::pending: return "pending";
        case TaskStatus::leased: return "leased";
        case TaskStatus::done: return "done";
    }
    return "unknown";
}

AnnotationQueue::AnnotationQueue(fs::path run_root, std::chrono::seconds lease, Clock clock)
    : run_root_(std::move(run_root)), lease_(lease), clock_(std::move(clock)) {
    if (!clock_) clock_ = [] { return std::chrono::system_clock::now(); };
    if (lease_.count() <= 0) {
        throw Error(ErrorKind::invalid_argument, "annotate", "lease duration must be positive");
    }
    std::error_code ec;
    if (!fs::is_directory(run_root_, ec)) {
        throw Error(ErrorKind::not_found, "annotate", "run root does not exist: " + run_root_.string());
    }
    replay();
}

void AnnotationQueue::replay() {
    std::error_code ec;
    if (!fs::exists(journal_path(), ec)) return;
    for (const auto& ev : read_jsonl(journal_path())) {
        const auto kind = ev.value("event", std::string());
        const auto id = ev.value("id", std::string());
        if (kind == "enqueue") {
            AnnotationTask t;
            t.id = id;
            t.image_path = ev.value("image_path", std::string());
            t.bucket = bucket_from_string(ev.value("bucket", std::string())).value_or(FailureBucket::fnf);
            t.order = next_order_++;
            tasks_.emplace(id, std::move(t));
        } else if (kind == "done") {
            const auto it = tasks_.find(id);
            if (it == tasks_.end()) {
                throw Error(ErrorKind::manifest_corrupt, "annotate", "journal completes unknown task " + id);
            }
            const auto& l = ev.at("left");
            const auto& r = ev.at("right");
            it->second.status = TaskStatus::done;
            it->second.annotation = EyePair{{l.at("x").get<double>(), l.at("y").get<double>()},
                                            {r.at("x").get<double>(), r.at("y").get<double>()}};
            it->second.result = outcome_from_string(ev.value("outcome", std::string()));
        } else {
            throw Error(ErrorKind::manifest_corrupt, "annotate", "unknown journal event '" + kind + "'");
        }
    }
}

std::size_t AnnotationQueue::enqueue_from_buckets() {
    std::lock_guard lock(mu_);
    std::size_t added = 0;
    for (auto bucket : kAllBuckets) {
        const fs::path dir = run_root_ / std::string(to_string(bucket));
        std::error_code ec;
        if (!fs::is_directory(dir, ec)) continue;
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(dir, ec)) {
            if (e.is_regular_file() && is_supported_image_path(e.path())) files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            const std::string id = f.filename().string();
            if (tasks_.contains(id)) continue;
            AnnotationTask t;
            t.id = id;
            t.image_path = (fs::path(std::string(to_string(bucket))) / id).generic_string();
            t.bucket = bucket;
            t.order = next_order_++;
            append_jsonl(journal_path(), {{"event", "enqueue"},
                                          {"id", id},
                                          {"image_path", t.image_path},
                                          {"bucket", to_string(bucket)}});
            tasks_.emplace(id, std::move(t));
            ++added;
        }
    }
    return added;
}

void AnnotationQueue::expire_locked(std::chrono::system_clock::time_point now) const {
    for (auto& [id, t] : tasks_) {
        if (t.status == TaskStatus::leased && t.lease && t.lease->expires <= now) {
            t.status = TaskStatus::pending;
            t.lease.reset();
        }
    }
}

std::optional<AnnotationTask> AnnotationQueue::next_task(const std::string& client) {
    std::lock_guard lock(mu_);
    const auto now = clock_();
    expire_locked(now);
    AnnotationTask* best = nullptr;
    for (auto& [id, t] : tasks_) {
        if (t.status == TaskStatus::pending && (!best || t.order < best->order)) best = &t;
    }
    if (!best) return std::nullopt;
    best->status = TaskStatus::leased;
    best->lease = Lease{client, now + lease_};
    return *best;
}

std::optional<AnnotationTask> AnnotationQueue::find(const std::string& id) const {
    std::lock_guard lock(mu_);
    expire_locked(clock_());
    const auto it = tasks_.find(id);
    if (it == tasks_.end()) return std::nullopt;
    return it->second;
}

AnnotationTask& AnnotationQueue::leased_locked(const std::string& id, const std::string& client) const {
    expire_locked(clock_());
    const auto it = tasks_.find(id);
    if (it == tasks_.end()) throw Error(ErrorKind::not_found, "annotate", "unknown task " + id);
    auto& t = it->second;
    if (t.status == TaskStatus::done) {
        throw Error(ErrorKind::stale_lease, "annotate", "task " + id + " is already annotated");
    }
    if (t.status != TaskStatus::leased || !t.lease || t.lease->client != client) {
        throw Error(ErrorKind::stale_lease, "annotate", "client does not hold a lease on task " + id);
    }
    return t;
}

void AnnotationQueue::check_lease(const std::string& id, const std::string& client) const {
    std::lock_guard lock(mu_);
    leased_locked(id, client);
}

void AnnotationQueue::complete(const Annotation& a, Outcome result) {
    std::lock_guard lock(mu_);
    auto& t = leased_locked(a.task_id, a.client);
    append_jsonl(journal_path(), {{"event", "done"},
                                  {"id", a.task_id},
                                  {"client", a.client},
                                  {"left", point_json(a.left)},
                                  {"right", point_json(a.right)},
                                  {"outcome", to_string(result)}});
    t.status = TaskStatus::done;
    t.lease.reset();
    t.annotation = EyePair{a.left, a.right};
    t.result = result;
}

QueueProgress AnnotationQueue::progress() const {
    std::lock_guard lock(mu_);
    expire_locked(clock_());
    QueueProgress p;
    for (const auto& [id, t] : tasks_) {
        switch (t.status) {
            case TaskStatus::pending: ++p.pending; break;
            case TaskStatus::leased: ++p.leased; break;
            case TaskStatus::done:
                ++p.done;
                if (t.result == Outcome::manual_success) ++p.manual_success;
                if (t.result == Outcome::manual_failed) ++p.manual_failed;
                break;
        }
    }
    return p;
}

std::size_t AnnotationQueue::size() const {
    std::lock_guard lock(mu_);
    return tasks_.size();
}

AnnotationService::AnnotationService(AnnotationQueue& queue, PipelineConfig config)
    : queue_(queue), config_(std::move(config)) {
    config_.validate();
}

Size AnnotationService::image_size_of(const AnnotationTask& task) const {
    return image_size(load_image(queue_.run_root() / task.image_path));
}

PipelineResult AnnotationService::submit(const Annotation& a) {
    queue_.check_lease(a.task_id, a.client);
    const auto task = queue_.find(a.task_id);
    const GrayImage gray = load_gray(queue_.run_root() / task->image_path);
    auto inside = [&](Point2 p) {
        return std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0.0 && p.y >= 0.0 && p.x < gray.width() &&
               p.y < gray.height();
    };
    if (!inside(a.left) || !inside(a.right)) {
        throw Error(ErrorKind::invalid_annotation, "annotate", "eye point outside the image");
    }
    if (a.left == a.right) {
        throw Error(ErrorKind::invalid_annotation, "annotate", "eye points coincide");
    }
    // One submission at a time from here, so a task's output is written once.
    std::lock_guard lock(submit_mu_);
    queue_.check_lease(a.task_id, a.client);
    PipelineResult r = resume_with_manual_eyes(gray, a.left, a.right, config_, task->id);
    if (r.outcome == Outcome::manual_success) {
        const fs::path rel = output_path_for(r.input);
        fs::create_directories(queue_.run_root() / rel.parent_path());
        save_image(*r.output_image, queue_.run_root() / rel);
        r.output = rel.generic_string();
    }
    r.bucket = task->bucket;
    queue_.complete(a, r.outcome);
    append_jsonl(queue_.run_root() / "manifest.jsonl", manifest_record(r, config_));
    return r;
}

}  // namespace facealign
