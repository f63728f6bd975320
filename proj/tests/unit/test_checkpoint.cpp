#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "camoseg/checkpoint.hpp"
#include "camoseg/errors.hpp"

using namespace camoseg;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint make_checkpoint() {
  Checkpoint ck;
  ck.epoch = 5;
  ck.iter = 123;
  ck.teacher_active = true;
  ck.config.epochs = 12;
  ck.config.seed = 99;
  ck.config.lambda_pc = 4.5;
  ck.student = ModelParams::init(7);
  ck.teacher = ModelParams::init(8, false);
  for (const auto& t : ck.student.tensors)
    ck.momentum.push_back(Tensor::full(t.shape(), 0.125));
  return ck;
}

std::string thrown_message(const std::string& path) {
  try {
    load_checkpoint(path);
  } catch (const CheckpointError& e) {
    return e.what();
  }
  return "";  // no throw
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("save/load round trip is bitwise") {
  const std::string path = "/tmp/camoseg_ck_roundtrip.bin";
  Checkpoint ck = make_checkpoint();
  save_checkpoint(path, ck);
  Checkpoint back = load_checkpoint(path);

  CHECK(back.epoch == 5);
  CHECK(back.iter == 123);
  CHECK(back.teacher_active);
  CHECK(back.config.resolved_text() == ck.config.resolved_text());

  REQUIRE(back.student.tensors.size() == ck.student.tensors.size());
  for (std::size_t i = 0; i < ck.student.tensors.size(); ++i) {
    CHECK(back.student.names[i] == ck.student.names[i]);
    CHECK(back.student.tensors[i].shape() == ck.student.tensors[i].shape());
    CHECK(back.student.tensors[i].data() == ck.student.tensors[i].data());
    CHECK(back.student.tensors[i].requires_grad());
    CHECK(back.teacher.tensors[i].data() == ck.teacher.tensors[i].data());
    CHECK_FALSE(back.teacher.tensors[i].requires_grad());
    CHECK(back.momentum[i].data() == ck.momentum[i].data());
  }

  // saving the loaded state reproduces the file byte for byte
  const std::string again = "/tmp/camoseg_ck_roundtrip2.bin";
  save_checkpoint(again, back);
  CHECK(slurp(path) == slurp(again));
  std::remove(again.c_str());
  std::remove(path.c_str());
}

TEST_CASE("structural corruption is diagnosed") {
  const std::string path = "/tmp/camoseg_ck_corrupt.bin";
  Checkpoint ck = make_checkpoint();
  save_checkpoint(path, ck);
  const std::string good = slurp(path);

  SUBCASE("bad magic") {
    std::string bad = good;
    bad[0] = 'X';
    spit(path, bad);
    CHECK(thrown_message(path) == path + ": not a checkpoint (bad magic)");
  }
  SUBCASE("unsupported version") {
    std::string bad = good;
    const std::uint32_t v = 2;
    std::memcpy(bad.data() + 4, &v, 4);
    spit(path, bad);
    CHECK(thrown_message(path) == path + ": unsupported checkpoint version 2");
  }
  SUBCASE("oversized manifest length") {
    std::string bad = good;
    const std::uint64_t huge = good.size() * 4;
    std::memcpy(bad.data() + 8, &huge, 8);
    spit(path, bad);
    CHECK(thrown_message(path) == path + ": manifest length exceeds file size");
  }
  SUBCASE("too small to be a checkpoint") {
    spit(path, good.substr(0, 10));
    CHECK(thrown_message(path) == path + ": not a checkpoint (too small)");
  }
  SUBCASE("truncated payload") {
    spit(path, good.substr(0, good.size() - 64));
    const std::string msg = thrown_message(path);
    CHECK(msg.find("truncated payload") != std::string::npos);
  }
  SUBCASE("tampered embedded config fails the hash self-check") {
    // the manifest stores the config it was hashed from; editing one digit
    // in place (same byte length) must be caught
    std::string bad = good;
    const std::string needle = "\"epochs\":12";
    const auto at = bad.find(needle);
    REQUIRE(at != std::string::npos);
    bad[at + needle.size() - 1] = '3';
    spit(path, bad);
    const std::string msg = thrown_message(path);
    CHECK(msg.find("config hash") != std::string::npos);
    CHECK(msg.find("does not match") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("save rejects misaligned momentum buffers") {
  Checkpoint ck = make_checkpoint();
  ck.momentum.pop_back();
  CHECK_THROWS_AS(save_checkpoint("/tmp/camoseg_ck_bad.bin", ck), std::invalid_argument);
}

}  // TEST_SUITE
