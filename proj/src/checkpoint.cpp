#include "camoseg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "camoseg/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

namespace camoseg {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'C', 'A', 'M', 'T'};

struct Entry {
  const char* section;
  const std::string* name;
  const Tensor* tensor;
};

std::vector<Entry> layout(const Checkpoint& ck) {
  static const std::string kMomentumName = "buffer";
  std::vector<Entry> out;
  for (std::size_t i = 0; i < ck.student.tensors.size(); ++i)
    out.push_back({"student", &ck.student.names[i], &ck.student.tensors[i]});
  for (std::size_t i = 0; i < ck.teacher.tensors.size(); ++i)
    out.push_back({"teacher", &ck.teacher.names[i], &ck.teacher.tensors[i]});
  for (std::size_t i = 0; i < ck.momentum.size(); ++i)
    out.push_back({"momentum", &ck.student.names[i], &ck.momentum[i]});
  return out;
}

void append_u32(std::string& s, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  s.append(b, 4);
}

void append_u64(std::string& s, std::uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  s.append(b, 8);
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  if (ck.momentum.size() != ck.student.tensors.size())
    throw std::invalid_argument("save_checkpoint: momentum buffers misaligned with student");

  json manifest;
  manifest["epoch"] = ck.epoch;
  manifest["iter"] = ck.iter;
  manifest["teacher_active"] = ck.teacher_active;
  manifest["config_hash"] = ck.config.hash_hex();
  manifest["config"] = ck.config.to_json();

  const auto entries = layout(ck);
  json params = json::array();
  std::uint64_t offset = 0;  // in doubles
  for (const auto& e : entries) {
    json p;
    p["name"] = *e.name;
    p["section"] = e.section;
    p["shape"] = e.tensor->shape();
    p["offset"] = offset;
    params.push_back(std::move(p));
    offset += e.tensor->data().size();
  }
  manifest["params"] = std::move(params);

  std::string out;
  out.append(kMagic, 4);
  append_u32(out, kCheckpointVersion);
  const std::string mtext = manifest.dump();
  append_u64(out, mtext.size());
  out += mtext;
  out.reserve(out.size() + offset * 8);
  for (const auto& e : entries) {
    const auto& d = e.tensor->data();
    out.append(reinterpret_cast<const char*>(d.data()), d.size() * sizeof(double));
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw CheckpointError("short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError(path + ": cannot read");
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string bytes = ss.str();

  auto fail = [&](const std::string& what) -> Checkpoint {
    throw CheckpointError(path + ": " + what);
  };
  if (bytes.size() < 16) return fail("not a checkpoint (too small)");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) return fail("not a checkpoint (bad magic)");
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  if (version != kCheckpointVersion)
    return fail("unsupported checkpoint version " + std::to_string(version));
  std::uint64_t mlen = 0;
  std::memcpy(&mlen, bytes.data() + 8, 8);
  if (16 + mlen > bytes.size()) return fail("manifest length exceeds file size");

  json manifest;
  try {
    manifest = json::parse(bytes.substr(16, mlen));
  } catch (const json::parse_error& e) {
    return fail(std::string("malformed manifest: ") + e.what());
  }

  Checkpoint ck;
  RunConfig cfg;
  try {
    ck.epoch = manifest.at("epoch").get<int>();
    ck.iter = manifest.at("iter").get<long>();
    ck.teacher_active = manifest.at("teacher_active").get<bool>();
    cfg = RunConfig::from_json(manifest.at("config"));
    const std::string stored_hash = manifest.at("config_hash").get<std::string>();
    if (stored_hash != cfg.hash_hex())
      return fail("config hash " + stored_hash + " does not match embedded config (" +
                  cfg.hash_hex() + ")");
  } catch (const json::exception& e) {
    return fail(std::string("malformed manifest: ") + e.what());
  } catch (const ConfigError& e) {
    return fail(std::string("malformed embedded config: ") + e.what());
  }
  ck.config = cfg;

  const std::size_t payload_off = 16 + static_cast<std::size_t>(mlen);
  const std::size_t payload_bytes = bytes.size() - payload_off;
  if (payload_bytes % sizeof(double) != 0)
    return fail("payload is not a whole number of doubles");
  const std::size_t total_doubles = payload_bytes / sizeof(double);
  const double* payload = reinterpret_cast<const double*>(bytes.data() + payload_off);

  if (!manifest.contains("params") || !manifest["params"].is_array())
    return fail("malformed manifest: missing params array");

  std::vector<Tensor> student_t, teacher_t, momentum_t;
  std::vector<std::string> student_n, teacher_n, momentum_n;
  std::uint64_t expected_offset = 0;
  try {
    for (const auto& p : manifest["params"]) {
      const std::string name = p.at("name").get<std::string>();
      const std::string section = p.at("section").get<std::string>();
      const std::vector<int> shape = p.at("shape").get<std::vector<int>>();
      const std::uint64_t offset = p.at("offset").get<std::uint64_t>();
      if (offset != expected_offset)
        return fail("parameter " + name + " has offset " + std::to_string(offset) +
                    ", expected " + std::to_string(expected_offset));
      std::size_t numel = 1;
      for (int d : shape) {
        if (d < 1) return fail("parameter " + name + " has a non-positive dimension");
        numel *= static_cast<std::size_t>(d);
      }
      if (offset + numel > total_doubles)
        return fail("truncated payload: parameter " + name + " needs doubles up to " +
                    std::to_string(offset + numel) + ", payload has " +
                    std::to_string(total_doubles));
      std::vector<double> data(payload + offset, payload + offset + numel);
      const bool is_student = section == "student";
      Tensor t = Tensor::from_data(shape, std::move(data), is_student);
      if (is_student) {
        student_t.push_back(std::move(t));
        student_n.push_back(name);
      } else if (section == "teacher") {
        teacher_t.push_back(std::move(t));
        teacher_n.push_back(name);
      } else if (section == "momentum") {
        momentum_t.push_back(std::move(t));
        momentum_n.push_back(name);
      } else {
        return fail("parameter " + name + " has unknown section '" + section + "'");
      }
      expected_offset = offset + numel;
    }
  } catch (const json::exception& e) {
    return fail(std::string("malformed manifest: ") + e.what());
  }
  if (expected_offset != total_doubles)
    return fail("payload size mismatch: manifest covers " + std::to_string(expected_offset) +
                " doubles, payload has " + std::to_string(total_doubles));

  // the tensors must line up with the fixed architecture
  const ModelParams reference = ModelParams::init(0, false);
  auto check_section = [&](const std::vector<Tensor>& ts, const std::vector<std::string>& ns,
                           const char* what) {
    if (ts.size() != reference.tensors.size())
      fail(std::string(what) + " section has " + std::to_string(ts.size()) +
           " tensors, model expects " + std::to_string(reference.tensors.size()));
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (ns[i] != reference.names[i])
        fail(std::string(what) + " parameter " + std::to_string(i) + " is '" + ns[i] +
             "', model expects '" + reference.names[i] + "'");
      if (ts[i].shape() != reference.tensors[i].shape())
        fail(std::string(what) + " parameter " + ns[i] + " has shape " +
             shape_str(ts[i].shape()) + ", model expects " +
             shape_str(reference.tensors[i].shape()));
    }
  };
  check_section(student_t, student_n, "student");
  check_section(teacher_t, teacher_n, "teacher");
  check_section(momentum_t, momentum_n, "momentum");

  ck.student.tensors = std::move(student_t);
  ck.student.names = std::move(student_n);
  ck.teacher.tensors = std::move(teacher_t);
  ck.teacher.names = std::move(teacher_n);
  ck.momentum = std::move(momentum_t);
  return ck;
}

}  // namespace camoseg
