#include "bcdnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

namespace bcdnet {

namespace {

constexpr char kMagic[4] = {'B', 'C', 'D', 'N'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  void f32s(std::span<const float> values) {
    for (float v : values) u32(std::bit_cast<std::uint32_t>(v));
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::size_t remaining() const { return size_ - pos_; }
  std::size_t position() const { return pos_; }

  void need(std::size_t n) const {
    if (remaining() < n) throw Error(ErrorKind::TruncatedFile, "checkpoint ends early");
  }
  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  void f32s(std::span<float> out) {
    need(out.size() * 4);
    for (float& v : out) v = std::bit_cast<float>(u32());
  }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

void write_record(Writer& w, const std::string& name, const Tensor<float>& t) {
  if (name.size() > 0xFFFF || t.rank() > 0xFF) {
    throw Error(ErrorKind::BadConfig, "tensor name or rank too large for checkpoint: " + name);
  }
  w.u16(static_cast<std::uint16_t>(name.size()));
  w.raw(name.data(), name.size());
  w.u8(static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
  w.f32s(t.data());
}

struct Parsed {
  nlohmann::json header;
  std::vector<std::pair<std::string, Tensor<float>>> records;
};

// Structural parse of everything between the version and the CRC trailer.
Parsed parse_body(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes.data(), bytes.size() - 4);
  r.str(4);
  r.u32();
  const std::uint32_t header_len = r.u32();
  Parsed parsed;
  const std::string header = r.str(header_len);
  parsed.header = nlohmann::json::parse(header, nullptr, false);
  while (r.remaining() > 0) {
    const std::uint16_t name_len = r.u16();
    std::string name = r.str(name_len);
    const std::uint8_t rank = r.u8();
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    std::size_t count = 1;
    for (std::size_t d : shape) {
      if (d != 0 && count > r.remaining() / 4 / d) {
        throw Error(ErrorKind::TruncatedFile, "checkpoint tensor " + name + " overruns the file");
      }
      count *= d;
    }
    Tensor<float> t(shape);
    r.f32s(t.data());
    parsed.records.emplace_back(std::move(name), std::move(t));
  }
  return parsed;
}

}  // namespace

std::uint32_t crc32(const std::uint8_t* data, std::size_t size) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  while (size > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = ::crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_checkpoint(Model<float>& model, const Adam<float>* optimizer,
                                            const nlohmann::json& meta) {
  nlohmann::json header;
  header["model"] = model.config();
  header["seed"] = model.seed();
  header["meta"] = meta.is_null() ? nlohmann::json::object() : meta;
  if (optimizer != nullptr) {
    const AdamConfig& c = optimizer->config();
    header["optimizer"] = {{"kind", "adam"},     {"lr", c.lr},   {"beta1", c.beta1},
                           {"beta2", c.beta2},   {"eps", c.eps}, {"steps", optimizer->steps()}};
  }
  const std::string header_text = header.dump();

  Writer w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(header_text.size()));
  w.raw(header_text.data(), header_text.size());
  for (Parameter<float>* p : model.parameters()) write_record(w, p->name, p->value);
  for (const nn::NamedBuffer<float>& b : model.buffers()) write_record(w, b.name, *b.tensor);
  if (optimizer != nullptr) {
    const auto& params = optimizer->params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      write_record(w, "adam.m:" + params[i]->name, optimizer->first_moments()[i]);
      write_record(w, "adam.v:" + params[i]->name, optimizer->second_moments()[i]);
    }
  }
  const std::uint32_t crc = crc32(w.bytes().data(), w.bytes().size());
  w.u32(crc);
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) throw Error(ErrorKind::TruncatedFile, "checkpoint shorter than its magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorKind::BadMagic, "not a BCDN checkpoint");
  }
  if (bytes.size() < 16) throw Error(ErrorKind::TruncatedFile, "checkpoint header is incomplete");
  Reader head(bytes.data() + 4, 4);
  const std::uint32_t version = head.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::VersionMismatch, "checkpoint version " + std::to_string(version) +
                                                ", expected " +
                                                std::to_string(kCheckpointVersion));
  }

  Reader tail(bytes.data() + bytes.size() - 4, 4);
  const std::uint32_t stored = tail.u32();
  const std::uint32_t actual = crc32(bytes.data(), bytes.size() - 4);
  Parsed parsed;
  if (stored != actual) {
    // A body that no longer frames correctly was cut short; otherwise the
    // bytes themselves changed.
    parse_body(bytes);
    throw Error(ErrorKind::ChecksumMismatch, "checkpoint CRC mismatch");
  }
  parsed = parse_body(bytes);
  if (parsed.header.is_discarded() || !parsed.header.is_object()) {
    throw Error(ErrorKind::DecodeError, "checkpoint header is not valid JSON");
  }

  Checkpoint ckpt;
  ckpt.config = parsed.header.at("model").get<ModelConfig>();
  ckpt.seed = parsed.header.value("seed", std::uint64_t{0});
  ckpt.meta = parsed.header.value("meta", nlohmann::json::object());
  if (parsed.header.contains("optimizer")) {
    ckpt.has_optimizer = true;
    ckpt.adam_steps = parsed.header["optimizer"].value("steps", std::size_t{0});
  }
  for (auto& [name, tensor] : parsed.records) {
    if (name.rfind("adam.m:", 0) == 0) {
      ckpt.adam_m.emplace(name.substr(7), std::move(tensor));
    } else if (name.rfind("adam.v:", 0) == 0) {
      ckpt.adam_v.emplace(name.substr(7), std::move(tensor));
    } else {
      ckpt.tensors.emplace_back(name, std::move(tensor));
    }
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, Model<float>& model,
                     const Adam<float>* optimizer, const nlohmann::json& meta) {
  const std::vector<std::uint8_t> bytes = encode_checkpoint(model, optimizer, meta);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::NotFound, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void load_into(Model<float>& model, const Checkpoint& ckpt) {
  if (!(model.config() == ckpt.config)) {
    throw Error(ErrorKind::BadConfig, "checkpoint config " + nlohmann::json(ckpt.config).dump() +
                                          " does not match model config " +
                                          nlohmann::json(model.config()).dump());
  }
  std::map<std::string, Tensor<float>*> slots;
  for (Parameter<float>* p : model.parameters()) slots[p->name] = &p->value;
  for (const nn::NamedBuffer<float>& b : model.buffers()) slots[b.name] = b.tensor;
  if (slots.size() != ckpt.tensors.size()) {
    throw Error(ErrorKind::BadConfig, "checkpoint holds " + std::to_string(ckpt.tensors.size()) +
                                          " tensors, model expects " +
                                          std::to_string(slots.size()));
  }
  for (const auto& [name, tensor] : ckpt.tensors) {
    auto it = slots.find(name);
    if (it == slots.end() || it->second->shape() != tensor.shape()) {
      throw Error(ErrorKind::BadConfig, "checkpoint tensor " + name + " does not fit the model");
    }
    *it->second = tensor;
  }
}

std::unique_ptr<Model<float>> load_model(const Checkpoint& ckpt) {
  auto model = std::make_unique<Model<float>>(ckpt.config, ckpt.seed);
  load_into(*model, ckpt);
  return model;
}

std::unique_ptr<Model<float>> load_model(const std::filesystem::path& path) {
  return load_model(read_checkpoint(path));
}

void load_optimizer(Adam<float>& optimizer, const Checkpoint& ckpt) {
  if (!ckpt.has_optimizer) throw Error(ErrorKind::BadConfig, "checkpoint has no optimizer state");
  const auto& params = optimizer.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = ckpt.adam_m.find(params[i]->name);
    auto v = ckpt.adam_v.find(params[i]->name);
    if (m == ckpt.adam_m.end() || v == ckpt.adam_v.end()) {
      throw Error(ErrorKind::BadConfig, "optimizer state missing for " + params[i]->name);
    }
    optimizer.first_moments()[i] = m->second;
    optimizer.second_moments()[i] = v->second;
  }
  optimizer.set_steps(ckpt.adam_steps);
}

}  // namespace bcdnet
