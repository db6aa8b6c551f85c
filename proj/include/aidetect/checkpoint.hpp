#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "aidetect/csv.hpp"
#include "aidetect/error.hpp"
#include "aidetect/logreg.hpp"
#include "aidetect/metrics.hpp"
#include "aidetect/model.hpp"

namespace aidetect {

// File layout: one line of compact JSON (header with the tensor manifest),
// then every manifest tensor as raw little-endian float64, row-major, in
// manifest order. Parameters come first, then Adam m and v when present.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;
  static constexpr std::string_view kMagic = "aidetect-checkpoint";

  net::Params params;
  std::optional<net::AdamState> adam;
  std::string tokenizer_hash;
  std::optional<LogRegModel> baseline;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 1-based index into history, 0 if untrained
  nlohmann::json run = nlohmann::json::object();

  const net::ModelConfig& config() const noexcept { return params.config; }

  std::string serialize() const {
    nlohmann::json manifest = nlohmann::json::array();
    std::vector<const net::Matrix*> tensors;
    const auto add = [&](const std::string& prefix, const net::Params& p) {
      net::for_each_tensor(p, [&](const std::string& name, const net::Matrix& m, net::TensorKind) {
        manifest.push_back({{"name", prefix + name}, {"shape", {m.rows(), m.cols()}}});
        tensors.push_back(&m);
      });
    };
    add("", params);
    nlohmann::json adam_json = nullptr;
    if (adam) {
      add("adam.m.", adam->m);
      add("adam.v.", adam->v);
      adam_json = {{"t", adam->t}, {"lr", adam->lr}, {"beta1", adam->beta1}, {"beta2", adam->beta2}, {"eps", adam->eps}};
    }
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& e : history) hist.push_back(to_json(e));

    const nlohmann::json header = {{"magic", kMagic},
                                   {"format_version", kFormatVersion},
                                   {"config", net::to_json(params.config)},
                                   {"tokenizer_hash", tokenizer_hash},
                                   {"history", hist},
                                   {"best_epoch", best_epoch},
                                   {"run", run},
                                   {"adam", adam_json},
                                   {"baseline", baseline ? to_json(*baseline) : nlohmann::json(nullptr)},
                                   {"tensors", manifest}};
    std::string out = header.dump();
    out.push_back('\n');
    for (const auto* m : tensors) append_doubles(out, m->data(), static_cast<std::size_t>(m->size()));
    return out;
  }

  static Checkpoint deserialize(std::string_view bytes) {
    const std::size_t nl = bytes.find('\n');
    if (nl == std::string_view::npos) throw FormatError("checkpoint has no header line");
    try {
      const nlohmann::json header = nlohmann::json::parse(bytes.substr(0, nl));
      if (header.at("magic").get<std::string>() != kMagic) throw FormatError("not a checkpoint file");
      if (header.at("format_version").get<int>() != kFormatVersion) throw FormatError("unsupported checkpoint version");

      Checkpoint ck;
      ck.params = net::Params::zeros(net::model_config_from_json(header.at("config")));
      ck.tokenizer_hash = header.at("tokenizer_hash").get<std::string>();
      for (const auto& e : header.at("history")) ck.history.push_back(epoch_from_json(e));
      ck.best_epoch = header.at("best_epoch").get<std::size_t>();
      ck.run = header.at("run");
      if (!header.at("baseline").is_null()) ck.baseline = logreg_from_json(header.at("baseline"));

      std::vector<net::Matrix*> tensors = net::tensor_list(ck.params);
      std::vector<std::string> names = net::tensor_names(ck.params);
      const auto& aj = header.at("adam");
      if (!aj.is_null()) {
        ck.adam = net::AdamState::fresh(ck.params.config);
        ck.adam->t = aj.at("t").get<std::int64_t>();
        ck.adam->lr = aj.at("lr").get<double>();
        ck.adam->beta1 = aj.at("beta1").get<double>();
        ck.adam->beta2 = aj.at("beta2").get<double>();
        ck.adam->eps = aj.at("eps").get<double>();
        const auto base = names;
        for (auto* m : net::tensor_list(ck.adam->m)) tensors.push_back(m);
        for (const auto& n : base) names.push_back("adam.m." + n);
        for (auto* v : net::tensor_list(ck.adam->v)) tensors.push_back(v);
        for (const auto& n : base) names.push_back("adam.v." + n);
      }

      const auto& manifest = header.at("tensors");
      if (manifest.size() != tensors.size()) throw FormatError("checkpoint manifest does not match its config");
      std::size_t offset = nl + 1;
      for (std::size_t i = 0; i < tensors.size(); ++i) {
        const auto& entry = manifest[i];
        auto* m = tensors[i];
        if (entry.at("name").get<std::string>() != names[i] || entry.at("shape").at(0).get<Eigen::Index>() != m->rows() ||
            entry.at("shape").at(1).get<Eigen::Index>() != m->cols()) {
          throw FormatError("checkpoint tensor '" + names[i] + "' has an unexpected name or shape");
        }
        const std::size_t n = static_cast<std::size_t>(m->size());
        if (bytes.size() < offset + n * 8) throw FormatError("checkpoint is truncated");
        read_doubles(bytes.substr(offset, n * 8), m->data(), n);
        offset += n * 8;
      }
      if (offset != bytes.size()) throw FormatError("checkpoint has trailing bytes");
      return ck;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed checkpoint header: ") + e.what());
    }
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    const std::string bytes = serialize();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }

  static Checkpoint load(const std::string& path) { return deserialize(csv::read_file(path)); }

 private:
  static void append_doubles(std::string& out, const double* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(src[i]);
      for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
    }
  }
  static void read_doubles(std::string_view in, double* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i * 8 + b])) << (8 * b);
      dst[i] = std::bit_cast<double>(bits);
    }
  }
};

}  // namespace aidetect
