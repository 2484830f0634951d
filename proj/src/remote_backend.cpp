#include "protegi/remote_backend.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cstdlib>
#include <thread>

namespace protegi {

void RemoteBackend::Slots::acquire()
{
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return free_ > 0; });
    --free_;
}

void RemoteBackend::Slots::release()
{
    {
        std::lock_guard lock(mu_);
        ++free_;
    }
    cv_.notify_one();
}

RemoteBackend::RemoteBackend(RemoteConfig cfg) : cfg_(std::move(cfg)), slots_(std::max(1, cfg_.max_in_flight))
{
    const auto scheme_end = cfg_.endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw BackendError(BackendError::Kind::config, 0, "endpoint is not a URL: " + cfg_.endpoint);
    const auto path_begin = cfg_.endpoint.find('/', scheme_end + 3);
    origin_ = cfg_.endpoint.substr(0, path_begin);
    path_ = path_begin == std::string::npos ? "/" : cfg_.endpoint.substr(path_begin);

    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
        throw BackendError(BackendError::Kind::config, 0, "credential variable " + cfg_.api_key_env + " is not set");
    api_key_ = key;
}

CompletionResponse RemoteBackend::complete(const CompletionRequest& req)
{
    req.validate();
    nlohmann::json body{
        {"model", cfg_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", req.prompt_text}}})},
        {"temperature", req.temperature},
        {"n", req.n_samples},
        {"max_tokens", req.max_tokens},
    };
    const std::string payload = body.dump();
    const httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};

    slots_.acquire();
    struct Release {
        Slots& s;
        ~Release() { s.release(); }
    } release{slots_};

    int last_status = 0;
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            auto delay = cfg_.retry_base * (1LL << std::min(attempt - 1, 20));
            std::this_thread::sleep_for(std::min<std::chrono::milliseconds>(delay, cfg_.retry_cap));
        }
        httplib::Client client(origin_);
        client.set_connection_timeout(cfg_.timeout);
        client.set_read_timeout(cfg_.timeout);
        auto res = client.Post(path_, headers, payload, "application/json");
        if (!res) {
            last_status = 0;
            last_error = httplib::to_string(res.error());
            continue;
        }
        last_status = res->status;
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw BackendError(BackendError::Kind::status, res->status,
                               "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));

        CompletionResponse out;
        out.backend_id = id();
        try {
            auto j = nlohmann::json::parse(res->body);
            for (const auto& choice : j.at("choices"))
                out.texts.push_back(choice.at("message").at("content").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(BackendError::Kind::parse, res->status, std::string("malformed reply: ") + e.what());
        }
        if (out.texts.size() != static_cast<std::size_t>(req.n_samples))
            throw BackendError(BackendError::Kind::parse, res->status,
                               "expected " + std::to_string(req.n_samples) + " choices, got " +
                                   std::to_string(out.texts.size()));
        return out;
    }
    if (last_status != 0)
        throw BackendError(BackendError::Kind::status, last_status, "retries exhausted: " + last_error);
    throw BackendError(BackendError::Kind::transport, 0, "retries exhausted: " + last_error);
}

} // namespace protegi
