#include "protegi/llm_backend.hpp"
#include "protegi/digest.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace protegi {

std::string_view call_kind_name(CallKind kind) noexcept
{
    switch (kind) {
    case CallKind::classify:
        return "classify";
    case CallKind::gradient:
        return "gradient";
    case CallKind::edit:
        return "edit";
    case CallKind::paraphrase:
        return "paraphrase";
    case CallKind::other:
        return "other";
    }
    return "other";
}

void CompletionRequest::validate() const
{
    if (prompt_text.empty())
        throw std::invalid_argument("completion request with empty prompt");
    if (!(temperature >= 0.0))
        throw std::invalid_argument("completion request with negative temperature");
    if (n_samples < 1)
        throw std::invalid_argument("completion request needs n_samples >= 1");
    if (temperature == 0.0 && n_samples != 1)
        throw std::invalid_argument("greedy decoding (temperature 0) returns exactly one sample");
    if (max_tokens < 1)
        throw std::invalid_argument("completion request needs max_tokens >= 1");
}

std::string cache_key(const CompletionRequest& req, std::string_view backend_id, std::string_view run_nonce)
{
    // %a keeps the exact temperature bits
    char temp[64];
    std::snprintf(temp, sizeof temp, "%a", req.temperature);
    const std::string n = std::to_string(req.n_samples);
    const std::string max_tokens = std::to_string(req.max_tokens);
    const std::string_view nonce = req.temperature > 0.0 ? run_nonce : std::string_view{};
    return sha256_hex_parts({"protegi-cache-v1", req.prompt_text, temp, n, max_tokens, backend_id, nonce});
}

std::string make_run_nonce()
{
    std::random_device rd;
    std::ostringstream out;
    out << std::hex << rd() << rd() << rd() << rd();
    return out.str();
}

CachingBackend::CachingBackend(std::shared_ptr<Backend> inner, std::filesystem::path dir, std::string run_nonce)
    : inner_(std::move(inner)), dir_(std::move(dir)), nonce_(std::move(run_nonce))
{
    std::filesystem::create_directories(dir_);
}

std::mutex& CachingBackend::stripe_for(std::string_view key)
{
    return stripes_[std::hash<std::string_view>{}(key) % stripes_.size()];
}

CompletionResponse CachingBackend::complete(const CompletionRequest& req)
{
    req.validate();
    const std::string key = cache_key(req, inner_->id(), nonce_);
    const auto path = dir_ / (key + ".json");

    std::lock_guard lock(stripe_for(key));
    if (std::ifstream in(path); in) {
        try {
            auto j = nlohmann::json::parse(in);
            CompletionResponse cached;
            cached.texts = j.at("texts").get<std::vector<std::string>>();
            cached.backend_id = j.at("backend_id").get<std::string>();
            cached.cached = true;
            if (cached.texts.size() == static_cast<std::size_t>(req.n_samples))
                return cached;
        } catch (const nlohmann::json::exception&) {
            // unreadable entry: fall through and overwrite it
        }
    }

    CompletionResponse fresh = inner_->complete(req);
    nlohmann::json j{{"texts", fresh.texts}, {"backend_id", fresh.backend_id}};
    const auto tmp = dir_ / (key + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << j.dump();
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    fresh.cached = false;
    return fresh;
}

CompletionResponse MeteredBackend::complete(const CompletionRequest& req)
{
    total_.fetch_add(1, std::memory_order_relaxed);
    by_kind_[static_cast<std::size_t>(req.kind)].fetch_add(1, std::memory_order_relaxed);
    CompletionResponse resp = inner_->complete(req);
    if (resp.cached)
        hits_.fetch_add(1, std::memory_order_relaxed);
    return resp;
}

CallCounts MeteredBackend::counts() const noexcept
{
    CallCounts c;
    c.total = total_.load();
    c.cache_hits = hits_.load();
    for (std::size_t i = 0; i < kCallKindCount; ++i)
        c.by_kind[i] = by_kind_[i].load();
    return c;
}

} // namespace protegi
