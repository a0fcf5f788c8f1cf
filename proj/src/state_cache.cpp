#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "spinkernel/ed.hpp"
#include "spinkernel/errors.hpp"

namespace spinkernel::ed {
namespace {

constexpr std::array<char, 8> kMagic = {'S', 'P', 'K', 'G', 'S', 'T', 'A', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 64;

void put_u64(unsigned char* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(v >> (8 * i));
}
void put_u32(unsigned char* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<unsigned char>(v >> (8 * i));
}
std::uint64_t get_u64(const unsigned char* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return v;
}
std::uint32_t get_u32(const unsigned char* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[i]) << (8 * i);
  return v;
}
void put_f64(unsigned char* out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(const unsigned char* in) { return std::bit_cast<double>(get_u64(in)); }

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t word) {
  for (int i = 0; i < 8; ++i) {
    h ^= (word >> (8 * i)) & 0xff;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

// Header layout (little endian):
//   0  magic[8]   8 version u32   12 N u32   16 sector u16   18 flags u16 (1 degenerate, 2 k=0)
//  20  gap f32   24 gamma f64    32 delta f64   40 h f64   48 tol f64   56 energy f64
void write_state(const std::filesystem::path& file, const GroundState& gs, double tol) {
  std::array<unsigned char, kHeaderSize> header{};
  std::memcpy(header.data(), kMagic.data(), kMagic.size());
  put_u32(&header[8], kVersion);
  put_u32(&header[12], static_cast<std::uint32_t>(gs.params.n_sites));
  const auto sector = static_cast<std::uint32_t>(gs.params.sector);
  const std::uint32_t flags = (gs.degenerate ? 1u : 0u) | (gs.params.zero_momentum ? 2u : 0u);
  put_u32(&header[16], sector | (flags << 16));
  put_u32(&header[20], std::bit_cast<std::uint32_t>(static_cast<float>(gs.gap)));
  put_f64(&header[24], gs.params.gamma);
  put_f64(&header[32], gs.params.delta);
  put_f64(&header[40], gs.params.h);
  put_f64(&header[48], tol);
  put_f64(&header[56], gs.energy);

  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw InvalidArgument("cannot open state file for writing: " + file.string());
  os.write(reinterpret_cast<const char*>(header.data()), header.size());
  std::array<unsigned char, 8> buf{};
  for (double a : gs.amplitudes) {
    put_f64(buf.data(), a);
    os.write(reinterpret_cast<const char*>(buf.data()), buf.size());
  }
  if (!os) throw InvalidArgument("failed writing state file " + file.string());
}

GroundState read_state(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open state file " + file.string());
  std::array<unsigned char, kHeaderSize> header{};
  is.read(reinterpret_cast<char*>(header.data()), header.size());
  if (!is || std::memcmp(header.data(), kMagic.data(), kMagic.size()) != 0) {
    throw InvalidArgument("not a ground-state file: " + file.string());
  }
  if (get_u32(&header[8]) != kVersion) throw InvalidArgument("unsupported state file version");
  GroundState gs;
  gs.params.n_sites = static_cast<int>(get_u32(&header[12]));
  const std::uint32_t word = get_u32(&header[16]);
  const std::uint32_t sector = word & 0xffff;
  if (sector > 2) throw InvalidArgument("corrupt sector field in " + file.string());
  gs.params.sector = static_cast<ParitySector>(sector);
  gs.degenerate = ((word >> 16) & 1u) != 0;
  gs.params.zero_momentum = ((word >> 16) & 2u) != 0;
  gs.gap = std::bit_cast<float>(get_u32(&header[20]));
  gs.params.gamma = get_f64(&header[24]);
  gs.params.delta = get_f64(&header[32]);
  gs.params.h = get_f64(&header[40]);
  gs.energy = get_f64(&header[56]);

  const HamiltonianOperator shape(gs.params);
  gs.amplitudes.resize(shape.dimension());
  std::array<unsigned char, 8> buf{};
  for (double& a : gs.amplitudes) {
    is.read(reinterpret_cast<char*>(buf.data()), buf.size());
    if (!is) throw InvalidArgument("truncated state file " + file.string());
    a = get_f64(buf.data());
  }
  return gs;
}

StateCache::StateCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path StateCache::path_for(const ModelParams& p, double tol) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, std::bit_cast<std::uint64_t>(p.gamma));
  h = fnv1a(h, std::bit_cast<std::uint64_t>(p.delta));
  h = fnv1a(h, std::bit_cast<std::uint64_t>(p.h));
  h = fnv1a(h, static_cast<std::uint64_t>(p.n_sites));
  h = fnv1a(h, static_cast<std::uint64_t>(p.sector) | (p.zero_momentum ? 0x100u : 0u));
  h = fnv1a(h, std::bit_cast<std::uint64_t>(tol));
  std::ostringstream name;
  name << "gs_" << std::hex << std::setw(16) << std::setfill('0') << h << ".bin";
  return dir_ / name.str();
}

std::optional<GroundState> StateCache::load(const ModelParams& p, double tol) const {
  const auto file = path_for(p, tol);
  if (!std::filesystem::exists(file)) return std::nullopt;
  GroundState gs = read_state(file);
  if (!(gs.params == p)) return std::nullopt;  // hash collision
  return gs;
}

void StateCache::store(const GroundState& gs, double tol) const {
  write_state(path_for(gs.params, tol), gs, tol);
}

}  // namespace spinkernel::ed
