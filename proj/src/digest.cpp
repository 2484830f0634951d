#include "protegi/digest.hpp"
#include "protegi/rng.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>
#include <stdexcept>

namespace protegi {

namespace {

struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* ctx) const noexcept { EVP_MD_CTX_free(ctx); }
};

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new())
    {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("sha256: init failed");
    }

    void update(std::string_view data)
    {
        if (EVP_DigestUpdate(ctx_.get(), data.data(), data.size()) != 1)
            throw std::runtime_error("sha256: update failed");
    }

    std::array<unsigned char, 32> finish()
    {
        std::array<unsigned char, 32> out{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), out.data(), &len) != 1 || len != out.size())
            throw std::runtime_error("sha256: final failed");
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx_;
};

std::string to_hex(const std::array<unsigned char, 32>& bytes)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string hex;
    hex.reserve(bytes.size() * 2);
    for (unsigned char b : bytes) {
        hex.push_back(digits[b >> 4]);
        hex.push_back(digits[b & 0x0f]);
    }
    return hex;
}

std::array<unsigned char, 32> hash_parts(std::initializer_list<std::string_view> parts)
{
    Sha256 sha;
    for (auto part : parts) {
        std::array<unsigned char, 8> len{};
        std::uint64_t n = part.size();
        for (int i = 0; i < 8; ++i)
            len[i] = static_cast<unsigned char>(n >> (8 * i));
        sha.update(std::string_view(reinterpret_cast<const char*>(len.data()), len.size()));
        sha.update(part);
    }
    return sha.finish();
}

} // namespace

std::string sha256_hex(std::string_view data)
{
    Sha256 sha;
    sha.update(data);
    return to_hex(sha.finish());
}

std::string sha256_hex_parts(std::initializer_list<std::string_view> parts)
{
    return to_hex(hash_parts(parts));
}

std::uint64_t digest64(std::initializer_list<std::string_view> parts)
{
    auto bytes = hash_parts(parts);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v = (v << 8) | bytes[i];
    return v;
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t count)
{
    // partial Fisher-Yates
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i)
        pool[i] = i;
    for (std::size_t i = 0; i < count; ++i)
        std::swap(pool[i], pool[i + uniform_index(n - i)]);
    pool.resize(count);
    return pool;
}

} // namespace protegi
