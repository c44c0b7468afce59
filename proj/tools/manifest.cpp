#include "manifest.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "hdx/error.hpp"

#ifndef HDX_VERSION
#define HDX_VERSION "0.0.0"
#endif

namespace hdx::cli {

std::string sha256_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorKind::InvalidInput, "cannot read " + path);
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        fail(ErrorKind::InvalidInput, "SHA-256 initialization failed");
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0)
            EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return hex.str();
}

RunManifest::RunManifest(std::string command, std::vector<std::string> argv)
    : command_(std::move(command)), argv_(std::move(argv))
{
}

void RunManifest::set_flag(const std::string& name, nlohmann::json value)
{
    flags_[name] = std::move(value);
}

void RunManifest::add_input(const std::string& path)
{
    inputs_[path] = sha256_file(path);
}

nlohmann::json RunManifest::to_json() const
{
    nlohmann::json j;
    j["command"] = command_;
    j["argv"] = argv_;
    j["flags"] = flags_;
    j["seed"] = seed_ ? nlohmann::json(*seed_) : nlohmann::json(nullptr);
    j["library_version"] = HDX_VERSION;
    j["threads"] = threads_;
    j["input_hashes"] = inputs_;
    const char* cap = std::getenv("HDX_SIZE_CAP");
    j["size_cap_env"] = cap ? nlohmann::json(cap) : nlohmann::json(nullptr);
    if (record_time_)
        j["wall_time_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return j;
}

}  // namespace hdx::cli
