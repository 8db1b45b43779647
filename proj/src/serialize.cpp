#include "spr/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "spr/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "SPT1 I/O assumes a little-endian host");
static_assert(sizeof(double) == 8);

namespace spr {

namespace fs = std::filesystem;

std::size_t Spt::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

void atomic_write_bytes(const fs::path& path, std::span<const char> bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write: " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

void write_spt(const fs::path& path, const std::string& dtype,
               std::span<const std::int64_t> shape, const char* payload,
               std::size_t payload_bytes) {
  nlohmann::json header;
  header["dtype"] = dtype;
  header["shape"] = std::vector<std::int64_t>(shape.begin(), shape.end());
  header["order"] = "C";
  const std::string htext = header.dump();

  std::vector<char> bytes;
  bytes.reserve(8 + htext.size() + payload_bytes);
  bytes.insert(bytes.end(), {'S', 'P', 'T', '1'});
  const std::uint32_t hlen = static_cast<std::uint32_t>(htext.size());
  const char* hl = reinterpret_cast<const char*>(&hlen);
  bytes.insert(bytes.end(), hl, hl + 4);
  bytes.insert(bytes.end(), htext.begin(), htext.end());
  bytes.insert(bytes.end(), payload, payload + payload_bytes);
  atomic_write_bytes(path, bytes);
}

}  // namespace

void save_spt_f64(const fs::path& path, std::span<const std::int64_t> shape,
                  std::span<const double> payload) {
  write_spt(path, "f64", shape, reinterpret_cast<const char*>(payload.data()),
            payload.size_bytes());
}

void save_spt_c128(const fs::path& path, std::span<const std::int64_t> shape,
                   std::span<const cplx> payload) {
  write_spt(path, "c128", shape, reinterpret_cast<const char*>(payload.data()),
            payload.size_bytes());
}

Spt load_spt(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open tensor file: " + path.string());

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "SPT1", 4) != 0)
    throw std::runtime_error("not an SPT1 file: " + path.string());

  std::uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 4);
  if (!in) throw std::runtime_error("truncated SPT1 header: " + path.string());

  std::string htext(hlen, '\0');
  in.read(htext.data(), hlen);
  if (!in) throw std::runtime_error("truncated SPT1 header: " + path.string());

  nlohmann::json header = nlohmann::json::parse(htext);
  Spt t;
  t.dtype = header.at("dtype").get<std::string>();
  t.shape = header.at("shape").get<std::vector<std::int64_t>>();
  if (header.at("order").get<std::string>() != "C")
    throw std::runtime_error("unsupported tensor order in " + path.string());

  const std::size_t n = t.element_count();
  if (t.dtype == "f64") {
    t.f64.resize(n);
    in.read(reinterpret_cast<char*>(t.f64.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
  } else if (t.dtype == "c128") {
    t.c128.resize(n);
    in.read(reinterpret_cast<char*>(t.c128.data()),
            static_cast<std::streamsize>(n * sizeof(cplx)));
  } else {
    throw std::runtime_error("unsupported dtype '" + t.dtype + "' in " + path.string());
  }
  if (!in) throw std::runtime_error("truncated SPT1 payload: " + path.string());
  return t;
}

void save_volume(const fs::path& path, const ComplexVolume& x) {
  const Shape3 s = x.shape();
  const std::int64_t shape[3] = {s.nt, s.nx, s.ny};
  save_spt_c128(path, shape, x.flat());
}

ComplexVolume load_volume(const fs::path& path) {
  Spt t = load_spt(path);
  if (t.dtype != "c128" || t.shape.size() != 3)
    throw std::runtime_error("expected a c128 rank-3 tensor in " + path.string());
  const Shape3 s{static_cast<int>(t.shape[1]), static_cast<int>(t.shape[2]),
                 static_cast<int>(t.shape[0])};
  return ComplexVolume(s, std::move(t.c128));
}

nlohmann::json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open JSON file: " + path.string());
  nlohmann::json j;
  in >> j;
  return j;
}

void save_json(const fs::path& path, const nlohmann::json& j) {
  const std::string text = j.dump(2) + "\n";
  atomic_write_bytes(path, {text.data(), text.size()});
}

}  // namespace spr
