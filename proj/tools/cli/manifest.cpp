#include "cli/manifest.hpp"

#include <openssl/evp.h>

#include <ctime>
#include <iomanip>
#include <memory>
#include <sstream>

#include "asap/data.hpp"
#include "asap/error.hpp"
#include "json.hpp"

namespace asap::cli {

using OrderedJson = nlohmann::ordered_json;

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error("sha256 failed");
  }
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << int(digest[i]);
  return os.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(read_file(path));
}

std::filesystem::path manifest_path(const std::filesystem::path& output) {
  return output.string() + ".manifest.json";
}

namespace {

std::string utc_iso8601(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

OrderedJson file_entries(const std::vector<std::filesystem::path>& paths) {
  OrderedJson arr = OrderedJson::array();
  for (const auto& p : paths) {
    const std::string bytes = read_file(p);
    arr.push_back({{"path", p.string()},
                   {"sha256", sha256_hex(bytes)},
                   {"bytes", bytes.size()}});
  }
  return arr;
}

}  // namespace

std::string manifest_json(const RunManifest& m) {
  OrderedJson j;
  j["tool"] = "asap_stream";
  j["version"] = ASAP_VERSION;
  j["command"] = m.command;
  j["subcommand"] = m.subcommand;
  OrderedJson cfg = OrderedJson::object();
  for (const auto& e : m.config) {
    if (e.values.size() == 1) {
      cfg[e.option] = e.values.front();
    } else {
      cfg[e.option] = e.values;
    }
  }
  j["config"] = std::move(cfg);
  j["seed"] = m.seed;
  j["inputs"] = file_entries(m.inputs);
  j["outputs"] = file_entries(m.outputs);
  j["wall_clock"] = {{"started_utc", utc_iso8601(m.started)},
                     {"elapsed_s", m.elapsed_s}};
  return j.dump(2) + "\n";
}

void write_manifests(const RunManifest& m) {
  const std::string text = manifest_json(m);
  for (const auto& out : m.outputs) write_file(manifest_path(out), text);
}

}  // namespace asap::cli
