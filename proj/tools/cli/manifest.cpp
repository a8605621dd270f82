#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "splatfeat/error.hpp"

namespace splatfeat::cli {

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md;
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return hex.str();
}

RunManifest::RunManifest(std::string command, const Common& common)
    : command_(std::move(command)), out_(common.out), start_(std::chrono::steady_clock::now()) {
    doc_["tool"] = "splatfeat";
    doc_["command"] = command_;
    doc_["seed"] = common.seed;
    doc_["threads"] = common.threads;
    doc_["precision"] = common.precision;
    doc_["inputs"] = nlohmann::json::array();
    doc_["outputs"] = nlohmann::json::array();
    doc_["config"] = nlohmann::json::object();
    doc_["results"] = nlohmann::json::object();
}

void RunManifest::input(const std::string& role, const std::filesystem::path& path) {
    doc_["inputs"].push_back({{"role", role}, {"path", path.string()}, {"sha256", sha256_file(path)}});
}

void RunManifest::output(const std::string& role, const std::filesystem::path& path) {
    doc_["outputs"].push_back({{"role", role}, {"path", path.string()}});
}

std::filesystem::path RunManifest::path() const { return out_ / (command_ + ".manifest.json"); }

const nlohmann::json& RunManifest::finish() {
    for (auto& o : doc_["outputs"]) o["sha256"] = sha256_file(o["path"].get<std::string>());
    doc_["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ofstream f(path());
    if (!f) throw IoError("cannot write " + path().string());
    f << doc_.dump(2) << '\n';
    return doc_;
}

}  // namespace splatfeat::cli
