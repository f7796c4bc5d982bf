#include "refinekit/digest.hpp"

#include "refinekit/error.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

namespace refinekit {

std::string sha256_hex(std::span<const std::uint8_t> bytes)
{
    unsigned char md[SHA256_DIGEST_LENGTH];
    SHA256(bytes.data(), bytes.size(), md);
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * SHA256_DIGEST_LENGTH);
    for (unsigned char b : md) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

std::string sha256_hex(std::string_view bytes)
{
    return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

std::string base64_encode(std::span<const std::uint8_t> bytes)
{
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text)
{
    std::string clean;
    clean.reserve(text.size());
    for (char c : text)
        if (c != '\n' && c != '\r' && c != ' ')
            clean.push_back(c);
    if (clean.size() % 4 != 0)
        throw FormatError("base64 input length is not a multiple of 4");
    std::vector<std::uint8_t> out(3 * clean.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()), static_cast<int>(clean.size()));
    if (n < 0)
        throw FormatError("invalid base64 input");
    // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
    std::size_t size = static_cast<std::size_t>(n);
    if (!clean.empty() && clean.back() == '=')
        --size;
    if (clean.size() >= 2 && clean[clean.size() - 2] == '=')
        --size;
    out.resize(size);
    return out;
}

} // namespace refinekit
