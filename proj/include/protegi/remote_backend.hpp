#pragma once

#include "protegi/llm_backend.hpp"

#include <chrono>
#include <condition_variable>

namespace protegi {

struct RemoteConfig {
    /// Full chat-completions URL, e.g. https://api.openai.com/v1/chat/completions
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-3.5-turbo";
    /// Name of the environment variable holding the bearer token.
    std::string api_key_env = "OPENAI_API_KEY";
    int max_in_flight = 8;
    int max_retries = 5;
    std::chrono::milliseconds retry_base{500};
    std::chrono::milliseconds retry_cap{30000};
    std::chrono::seconds timeout{60};
};

/// Chat-completions client: one user message per request, `n` samples.
/// Retries 429, 5xx and transport failures with capped exponential backoff.
class RemoteBackend final : public Backend {
public:
    /// Reads the credential from the environment; throws BackendError(config)
    /// if it is unset or the endpoint is not a URL.
    explicit RemoteBackend(RemoteConfig cfg);

    CompletionResponse complete(const CompletionRequest& req) override;
    std::string id() const override { return "remote:" + cfg_.model; }

private:
    class Slots {
    public:
        explicit Slots(int n) : free_(n) {}
        void acquire();
        void release();

    private:
        std::mutex mu_;
        std::condition_variable cv_;
        int free_;
    };

    RemoteConfig cfg_;
    std::string origin_;
    std::string path_;
    std::string api_key_;
    Slots slots_;
};

} // namespace protegi
