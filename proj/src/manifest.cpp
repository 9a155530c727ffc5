#include <algorithm>
#include <fstream>
#include <sstream>

#include "bcdnet/data.hpp"

namespace bcdnet::data {

namespace fs = std::filesystem;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "test") return Split::Test;
  throw Error(ErrorKind::BadConfig, "unknown split '" + std::string(text) + "'");
}

SplitCounts split_counts(std::size_t n) {
  constexpr std::size_t kParts[3] = {7, 2, 1};
  std::size_t counts[3];
  std::size_t remainders[3];
  std::size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    counts[s] = kParts[s] * n / 10;
    remainders[s] = kParts[s] * n % 10;
    assigned += counts[s];
  }
  for (std::size_t left = n - assigned; left > 0; --left) {
    int best = 0;
    for (int s = 1; s < 3; ++s) {
      if (remainders[s] > remainders[best]) best = s;
    }
    ++counts[best];
    remainders[best] = 0;
  }
  return {counts[0], counts[1], counts[2]};
}

namespace {

bool is_png(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png";
}

}  // namespace

DatasetManifest build_manifest(const fs::path& root, std::uint64_t seed) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorKind::NotFound, "dataset root " + root.string() + " is not a directory");
  }
  DatasetManifest manifest;
  manifest.root = root;
  manifest.seed = seed;
  for (const fs::directory_entry& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) manifest.class_names.push_back(entry.path().filename().string());
  }
  std::sort(manifest.class_names.begin(), manifest.class_names.end());
  if (manifest.class_names.empty()) {
    throw Error(ErrorKind::NoClasses, "no class directories under " + root.string());
  }

  for (std::size_t label = 0; label < manifest.class_names.size(); ++label) {
    const std::string& name = manifest.class_names[label];
    std::vector<fs::path> files;
    for (const fs::directory_entry& entry : fs::directory_iterator(root / name)) {
      if (entry.is_regular_file() && is_png(entry.path())) {
        files.push_back(fs::path(name) / entry.path().filename());
      }
    }
    if (files.empty()) throw Error(ErrorKind::EmptyClass, "class '" + name + "' has no images");
    std::sort(files.begin(), files.end());

    std::vector<std::size_t> order(files.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(seed, label));
    rng.shuffle(order);

    const SplitCounts counts = split_counts(files.size());
    std::vector<Split> assigned(files.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      assigned[order[rank]] = rank < counts.train               ? Split::Train
                              : rank < counts.train + counts.val ? Split::Val
                                                                 : Split::Test;
    }
    for (std::size_t i = 0; i < files.size(); ++i) {
      manifest.records.push_back({files[i], label, assigned[i]});
    }
  }
  return manifest;
}

std::vector<Record> DatasetManifest::split(Split which) const {
  std::vector<Record> out;
  for (const Record& r : records) {
    if (r.split == which) out.push_back(r);
  }
  return out;
}

std::string DatasetManifest::to_tsv() const {
  std::ostringstream os;
  for (const Record& r : records) {
    os << to_string(r.split) << '\t' << r.label << '\t' << r.path.generic_string() << '\n';
  }
  return os.str();
}

void DatasetManifest::write_tsv(const fs::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << to_tsv();
}

}  // namespace bcdnet::data
