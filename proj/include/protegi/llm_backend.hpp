#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace protegi {

/// What a completion call is for; only used for auditing, never sent or
/// hashed.
enum class CallKind : std::uint8_t { classify, gradient, edit, paraphrase, other };
inline constexpr std::size_t kCallKindCount = 5;
std::string_view call_kind_name(CallKind kind) noexcept;

inline constexpr int kClassifyMaxTokens = 4;
inline constexpr int kMetaMaxTokens = 512;

struct CompletionRequest {
    std::string prompt_text;
    double temperature = 0.0;
    int n_samples = 1;
    int max_tokens = kClassifyMaxTokens;
    CallKind kind = CallKind::other;

    /// Throws std::invalid_argument when the request breaks its invariants.
    void validate() const;
};

struct CompletionResponse {
    std::vector<std::string> texts;
    std::string backend_id;
    bool cached = false;
};

class BackendError : public std::runtime_error {
public:
    enum class Kind { status, parse, transport, config };

    BackendError(Kind kind, int status, const std::string& what)
        : std::runtime_error(what), kind_(kind), status_(status)
    {
    }
    Kind kind() const noexcept { return kind_; }
    /// HTTP status for Kind::status, otherwise 0.
    int status() const noexcept { return status_; }

private:
    Kind kind_;
    int status_;
};

/// A black-box text completion endpoint. Implementations must be safe to
/// call concurrently.
class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResponse complete(const CompletionRequest& req) = 0;
    virtual std::string id() const = 0;
};

/// Hex digest keying the response cache. Stochastic requests (temperature
/// > 0) also mix in the run nonce.
std::string cache_key(const CompletionRequest& req, std::string_view backend_id, std::string_view run_nonce);

/// Fresh random nonce for a run.
std::string make_run_nonce();

/// Disk cache in front of another backend: one JSON file per key.
class CachingBackend final : public Backend {
public:
    CachingBackend(std::shared_ptr<Backend> inner, std::filesystem::path dir, std::string run_nonce);

    CompletionResponse complete(const CompletionRequest& req) override;
    std::string id() const override { return inner_->id(); }

    const std::string& run_nonce() const noexcept { return nonce_; }

private:
    std::mutex& stripe_for(std::string_view key);

    std::shared_ptr<Backend> inner_;
    std::filesystem::path dir_;
    std::string nonce_;
    std::array<std::mutex, 64> stripes_;
};

struct CallCounts {
    std::uint64_t total = 0;
    std::uint64_t cache_hits = 0;
    std::array<std::uint64_t, kCallKindCount> by_kind{};

    std::uint64_t of(CallKind kind) const noexcept { return by_kind[static_cast<std::size_t>(kind)]; }
    /// Calls that reached the underlying backend.
    std::uint64_t billed() const noexcept { return total - cache_hits; }
};

/// Counts every complete() call exactly once, by kind; cache hits are
/// tracked separately.
class MeteredBackend final : public Backend {
public:
    explicit MeteredBackend(std::shared_ptr<Backend> inner) : inner_(std::move(inner)) {}

    CompletionResponse complete(const CompletionRequest& req) override;
    std::string id() const override { return inner_->id(); }

    CallCounts counts() const noexcept;

private:
    std::shared_ptr<Backend> inner_;
    std::atomic<std::uint64_t> total_{0};
    std::atomic<std::uint64_t> hits_{0};
    std::array<std::atomic<std::uint64_t>, kCallKindCount> by_kind_{};
};

} // namespace protegi
