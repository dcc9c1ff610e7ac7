#include <array>
#include <fstream>
#include <memory>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "xwalk/cli.hpp"
#include "xwalk/types.hpp"

namespace xwalk {

std::string sha256_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md;
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

void RunManifest::add_artifact(const std::filesystem::path& out_dir_path, const std::string& name)
{
    artifacts.push_back({name, sha256_file(out_dir_path / name)});
}

nlohmann::json RunManifest::to_json() const
{
    nlohmann::json arts = nlohmann::json::array();
    for (const auto& a : artifacts) arts.push_back({{"path", a.path}, {"sha256", a.sha256}});
    return {
        {"tool", "xwalk"},
        {"version", kToolVersion},
        {"command", command},
        {"inputs", inputs},
        {"config", config},
        {"out_dir", out_dir},
        {"counts", counts},
        {"stage_timings_ms", stage_timings_ms},
        {"artifacts", arts},
    };
}

} // namespace xwalk
