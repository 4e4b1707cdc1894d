#include "grip/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace grip {

namespace {

constexpr char kMagic[4] = {'G', 'R', 'I', 'P'};
constexpr uint32_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void write_doubles(std::ostream& out, const Vec& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::istream& in, Vec& v) {
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
}

}  // namespace

void save_checkpoint(const std::string& path, const ScorerParams& params) {
  require(!params.layers.empty(), "save_checkpoint: uninitialized params");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("save_checkpoint: cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof kMagic);
  write_u32(out, kFormatVersion);
  write_u32(out, static_cast<uint32_t>(params.hidden));
  write_u32(out, static_cast<uint32_t>(params.feature_dim));
  write_u32(out, static_cast<uint32_t>(params.layers.size()));
  for (const DenseLayer& l : params.layers) {
    write_u32(out, static_cast<uint32_t>(l.in()));
    write_u32(out, static_cast<uint32_t>(l.out()));
    write_u32(out, static_cast<uint32_t>(l.act));
  }
  for (const DenseLayer& l : params.layers) {
    write_doubles(out, l.w.data);
    write_doubles(out, l.b);
  }
  out.flush();
  if (!out) fail("save_checkpoint: write to '" + path + "' failed");
}

ScorerParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("load_checkpoint: cannot open '" + path + "'");
  char magic[4] = {};
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    fail("load_checkpoint: '" + path + "' is not a scorer checkpoint (bad magic)");
  uint32_t version = read_u32(in);
  if (version != kFormatVersion)
    fail("load_checkpoint: format version " + std::to_string(version) +
         " not supported; expected " + std::to_string(kFormatVersion));

  ScorerParams params;
  params.hidden = static_cast<int>(read_u32(in));
  params.feature_dim = static_cast<int>(read_u32(in));
  uint32_t n_layers = read_u32(in);
  if (!in || n_layers == 0 || n_layers > 64)
    fail("load_checkpoint: corrupt layer table in '" + path + "'");
  params.layers.resize(n_layers);
  for (DenseLayer& l : params.layers) {
    uint32_t in_dim = read_u32(in);
    uint32_t out_dim = read_u32(in);
    uint32_t act = read_u32(in);
    if (!in || in_dim == 0 || out_dim == 0 || act > 3)
      fail("load_checkpoint: corrupt layer header in '" + path + "'");
    l.w = Matrix(static_cast<int>(out_dim), static_cast<int>(in_dim));
    l.b.assign(out_dim, 0.0);
    l.act = static_cast<Activation>(act);
  }
  for (DenseLayer& l : params.layers) {
    read_doubles(in, l.w.data);
    read_doubles(in, l.b);
  }
  if (!in) fail("load_checkpoint: truncated checkpoint '" + path + "'");
  return params;
}

}  // namespace grip
