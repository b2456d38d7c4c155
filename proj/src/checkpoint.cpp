#include "tdm/checkpoint.hpp"

#include <cstring>

#include "tdm/artifact.hpp"

namespace tdm {

namespace {

void put_mat(std::vector<std::uint8_t>& out, const Matf& m) {
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  const std::size_t bytes = sizeof(float) * static_cast<std::size_t>(m.size());
  const std::size_t at = out.size();
  out.resize(at + bytes);
  std::memcpy(out.data() + at, m.data(), bytes);
}

Matf get_mat(const std::vector<std::uint8_t>& in, std::size_t& at, const std::string& name,
             long expect_rows, long expect_cols) {
  const std::uint32_t rows = get_u32(in, at);
  const std::uint32_t cols = get_u32(in, at);
  if (rows != static_cast<std::uint32_t>(expect_rows) ||
      cols != static_cast<std::uint32_t>(expect_cols))
    throw TdmError("checkpoint: tensor '" + name + "' has shape " + std::to_string(rows) +
                   "x" + std::to_string(cols) + ", expected " + std::to_string(expect_rows) +
                   "x" + std::to_string(expect_cols));
  Matf m(rows, cols);
  const std::size_t bytes = sizeof(float) * static_cast<std::size_t>(m.size());
  require(at + bytes <= in.size(), "checkpoint payload truncated in tensor '" + name + "'");
  std::memcpy(m.data(), in.data() + at, bytes);
  at += bytes;
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::string& model_kind,
                     const nlohmann::json& config, const ModelParameters<float>& params,
                     std::uint64_t config_hash) {
  std::vector<std::uint8_t> payload;
  put_u64(payload, static_cast<std::uint64_t>(params.step));
  put_u32(payload, static_cast<std::uint32_t>(params.tensors.size()));
  for (const auto& t : params.tensors) {
    put_u32(payload, static_cast<std::uint32_t>(t.name.size()));
    payload.insert(payload.end(), t.name.begin(), t.name.end());
    put_mat(payload, t.value);
    put_mat(payload, t.moment1);
    put_mat(payload, t.moment2);
  }
  ArtifactHeader header;
  header.kind = "checkpoint";
  header.meta["model_kind"] = model_kind;
  header.meta["config"] = config;
  header.meta["step"] = params.step;
  header.meta["parameter_count"] = params.count();
  header.config_hash = config_hash;
  write_artifact(path, header, payload);
}

CheckpointInfo peek_checkpoint(const std::filesystem::path& path) {
  Artifact a = read_artifact(path, "checkpoint");
  CheckpointInfo info;
  info.model_kind = a.header.meta.at("model_kind").get<std::string>();
  info.config = a.header.meta.at("config");
  info.step = a.header.meta.at("step").get<std::int64_t>();
  info.config_hash = a.header.config_hash;
  return info;
}

CheckpointInfo load_checkpoint(const std::filesystem::path& path,
                               const std::string& expected_kind,
                               ModelParameters<float>& params) {
  Artifact a = read_artifact(path, "checkpoint");
  CheckpointInfo info;
  info.model_kind = a.header.meta.at("model_kind").get<std::string>();
  info.config = a.header.meta.at("config");
  info.config_hash = a.header.config_hash;
  require(info.model_kind == expected_kind,
          "checkpoint: model kind '" + info.model_kind + "' does not match expected '" +
              expected_kind + "' in " + path.string());

  std::size_t at = 0;
  params.step = static_cast<std::int64_t>(get_u64(a.payload, at));
  info.step = params.step;
  const std::uint32_t count = get_u32(a.payload, at);
  require(count == params.tensors.size(),
          "checkpoint: tensor count " + std::to_string(count) + " does not match expected " +
              std::to_string(params.tensors.size()) + " in " + path.string());
  for (auto& t : params.tensors) {
    const std::uint32_t name_len = get_u32(a.payload, at);
    require(at + name_len <= a.payload.size(), "checkpoint name truncated");
    const std::string name(a.payload.begin() + at, a.payload.begin() + at + name_len);
    at += name_len;
    require(name == t.name, "checkpoint: tensor '" + name + "' found where '" + t.name +
                                "' was expected in " + path.string());
    t.value = get_mat(a.payload, at, name, t.value.rows(), t.value.cols());
    t.moment1 = get_mat(a.payload, at, name, t.value.rows(), t.value.cols());
    t.moment2 = get_mat(a.payload, at, name, t.value.rows(), t.value.cols());
  }
  require(at == a.payload.size(), "checkpoint payload has trailing bytes: " + path.string());
  return info;
}

}  // namespace tdm
