#include "tlsi/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace tlsi {

namespace fs = std::filesystem;
using nlohmann::json;

void save_checkpoint(const std::string& dir, const ParameterStore& params,
                     const json& config_echo) {
  const fs::path target(dir);
  const fs::path tmp(dir + ".tmp");
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  json manifest;
  manifest["format_version"] = kCheckpointFormatVersion;
  manifest["dtype"] = "f64le";
  manifest["config"] = config_echo;
  json plist = json::array();
  for (const auto& p : params) {
    json entry;
    entry["name"] = p->name;
    entry["shape"] = p->value.shape();
    entry["trainable"] = p->trainable;
    plist.push_back(entry);

    std::ofstream out(tmp / (p->name + ".bin"), std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + p->name + ".bin");
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    if (!out) throw std::runtime_error("checkpoint: short write for " + p->name);
  }
  manifest["parameters"] = plist;
  {
    std::ofstream out(tmp / "manifest.json");
    if (!out) throw std::runtime_error("checkpoint: cannot write manifest.json");
    out << manifest.dump(2) << '\n';
  }

  fs::remove_all(target);
  fs::rename(tmp, target);
}

json load_checkpoint_manifest(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw std::runtime_error("checkpoint: cannot open " + dir + "/manifest.json");
  json manifest = json::parse(in, nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object() || !manifest.contains("parameters") ||
      !manifest.contains("format_version"))
    throw std::runtime_error("checkpoint: corrupt manifest in " + dir);
  if (manifest["format_version"].get<int>() != kCheckpointFormatVersion)
    throw std::runtime_error("checkpoint: unsupported format version in " + dir);
  return manifest;
}

void load_checkpoint_params(const std::string& dir, ParameterStore& params) {
  const json manifest = load_checkpoint_manifest(dir);
  std::size_t listed = 0;
  for (const auto& entry : manifest["parameters"]) {
    const std::string name = entry["name"].get<std::string>();
    const auto shape = entry["shape"].get<std::vector<std::size_t>>();
    ++listed;
    Parameter* p = params.find(name);
    if (!p)
      throw std::runtime_error("checkpoint: parameter '" + name +
                               "' in manifest has no counterpart in the model");
    if (p->value.shape() != shape) {
      Array want(shape);
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "': checkpoint " +
                               want.shape_str() + " vs model " + p->value.shape_str());
    }
    std::ifstream in(fs::path(dir) / (name + ".bin"), std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: missing tensor file for '" + name + "'");
    in.read(reinterpret_cast<char*>(p->value.data()),
            static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(p->value.size() * sizeof(double)))
      throw std::runtime_error("checkpoint: truncated tensor file for '" + name + "'");
  }
  if (listed != params.size())
    throw std::runtime_error("checkpoint: model has " + std::to_string(params.size()) +
                             " parameters but manifest lists " + std::to_string(listed));
}

}  // namespace tlsi
