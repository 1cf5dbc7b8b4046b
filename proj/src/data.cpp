#include "adaprox/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <zlib.h>

#include "adaprox/errors.hpp"
#include "adaprox/rng.hpp"

namespace adaprox {
namespace {

using Triplet = Eigen::Triplet<double>;

std::string read_all(const std::filesystem::path& path) {
  const bool gz = path.extension() == ".gz";
  if (gz) {
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (!f) throw IoError("cannot open " + path.string());
    std::string out;
    char buf[1 << 16];
    int got = 0;
    while ((got = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(got));
    const bool failed = got < 0;
    gzclose(f);
    if (failed) throw IoError("gzip read failed for " + path.string());
    return out;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_double(std::string_view tok, std::size_t line, const char* what) {
  double v = 0.0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ParseError(std::string("malformed ") + what + " '" + std::string(tok) + "'", line);
  }
  return v;
}

std::map<double, double> resolve_labels(const std::set<double>& raw, LabelScheme scheme) {
  auto listing = [&] {
    std::ostringstream os;
    bool first = true;
    for (double v : raw) {
      os << (first ? "" : ", ") << v;
      first = false;
    }
    return os.str();
  };
  std::map<double, double> map;
  if (scheme == LabelScheme::kDigits) {
    for (double v : raw) {
      if (v != std::floor(v) || v < 0 || v > 9) {
        throw UnsupportedLabelError("labels are not digits 0-9: {" + listing() + "}");
      }
      map[v] = v <= 4 ? -1.0 : 1.0;
    }
    return map;
  }
  const auto within = [&](std::initializer_list<double> allowed) {
    return std::all_of(raw.begin(), raw.end(), [&](double v) {
      return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
    });
  };
  if (within({-1.0, 1.0})) {
    map[-1.0] = -1.0;
    map[1.0] = 1.0;
  } else if (within({0.0, 1.0})) {
    map[0.0] = -1.0;
    map[1.0] = 1.0;
  } else if (within({1.0, 2.0})) {
    map[1.0] = -1.0;
    map[2.0] = 1.0;
  } else {
    throw UnsupportedLabelError("label set is not binary: {" + listing() + "}");
  }
  return map;
}

}  // namespace

std::string checksum_bytes(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

Dataset parse_libsvm(std::istream& in, const std::string& name, std::optional<Eigen::Index> expected_dim,
                     LabelScheme scheme) {
  std::vector<Triplet> entries;
  std::vector<double> raw_labels;
  std::string line;
  std::size_t line_no = 0;
  Eigen::Index max_index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream tokens(line);
    std::string tok;
    if (!(tokens >> tok)) continue;  // blank line
    raw_labels.push_back(parse_double(tok, line_no, "label"));
    const auto row = static_cast<Eigen::Index>(raw_labels.size() - 1);
    long previous = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size()) {
        throw ParseError("expected <index>:<value>, got '" + tok + "'", line_no);
      }
      long idx = 0;
      const auto res = std::from_chars(tok.data(), tok.data() + colon, idx);
      if (res.ec != std::errc() || res.ptr != tok.data() + colon || idx < 1) {
        throw ParseError("bad feature index in '" + tok + "'", line_no);
      }
      if (idx <= previous) throw ParseError("feature indices must be strictly increasing", line_no);
      previous = idx;
      const double v = parse_double(std::string_view(tok).substr(colon + 1), line_no, "value");
      if (!std::isfinite(v)) throw ParseError("non-finite feature value", line_no);
      max_index = std::max<Eigen::Index>(max_index, idx);
      if (v != 0.0) entries.emplace_back(row, idx - 1, v);
    }
  }
  if (raw_labels.empty()) throw ParseError("no data rows", 0);
  Eigen::Index dim = max_index;
  if (expected_dim) {
    if (*expected_dim < max_index) {
      throw ParseError("feature index " + std::to_string(max_index) + " exceeds expected dimension " +
                           std::to_string(*expected_dim),
                       0);
    }
    dim = *expected_dim;
  }
  if (dim < 1) throw ParseError("dataset has no features", 0);

  const auto map = resolve_labels(std::set<double>(raw_labels.begin(), raw_labels.end()), scheme);
  Dataset ds;
  ds.name = name;
  ds.labels.resize(static_cast<Eigen::Index>(raw_labels.size()));
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    ds.labels[static_cast<Eigen::Index>(i)] = map.at(raw_labels[i]);
  }
  ds.features.resize(static_cast<Eigen::Index>(raw_labels.size()), dim);
  ds.features.setFromTriplets(entries.begin(), entries.end());
  ds.features.makeCompressed();
  return ds;
}

Dataset read_libsvm(const std::filesystem::path& path, std::optional<Eigen::Index> expected_dim,
                    LabelScheme scheme) {
  const std::string bytes = read_all(path);
  std::istringstream in(bytes);
  std::string stem = path.filename().string();
  if (path.extension() == ".gz") stem = path.stem().string();
  Dataset ds = parse_libsvm(in, stem, expected_dim, scheme);
  ds.source_checksum = checksum_bytes(bytes);
  ds.provenance = "file:" + path.string();
  return ds;
}

void write_libsvm(const Dataset& ds, std::ostream& out) {
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    out << (ds.labels[i] > 0 ? "+1" : "-1");
    for (SparseRows::InnerIterator it(ds.features, i); it; ++it) {
      out << ' ' << (it.index() + 1) << ':' << it.value();
    }
    out << '\n';
  }
}

void write_libsvm(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_libsvm(ds, out);
  if (!out) throw IoError("write failed for " + path.string());
}

Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed) {
  const auto total = static_cast<std::size_t>(ds.rows());
  if (n < 1 || n > total) {
    throw ArgumentError("subsample: n must lie in [1, " + std::to_string(total) + "]");
  }
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  RngStream rng(seed, 0, 0x5b5);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.uniform_index(total - i);
    std::swap(order[i], order[j]);
  }
  order.resize(n);
  std::sort(order.begin(), order.end());

  std::vector<Triplet> entries;
  Dataset out;
  out.labels.resize(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const auto src = static_cast<Eigen::Index>(order[r]);
    out.labels[static_cast<Eigen::Index>(r)] = ds.labels[src];
    for (SparseRows::InnerIterator it(ds.features, src); it; ++it) {
      entries.emplace_back(static_cast<Eigen::Index>(r), it.index(), it.value());
    }
  }
  out.features.resize(static_cast<Eigen::Index>(n), ds.cols());
  out.features.setFromTriplets(entries.begin(), entries.end());
  out.features.makeCompressed();
  out.name = ds.name;
  out.source_checksum = ds.source_checksum;
  out.provenance = "subsample(" + ds.name + ", seed=" + std::to_string(seed) + ", n=" + std::to_string(n) + ")";
  return out;
}

Dataset scale_features(const Dataset& ds, FeatureScaling mode) {
  Dataset out = ds;
  if (mode == FeatureScaling::kNone) return out;
  Eigen::VectorXd col_max = Eigen::VectorXd::Zero(ds.cols());
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    for (SparseRows::InnerIterator it(ds.features, i); it; ++it) {
      col_max[it.index()] = std::max(col_max[it.index()], std::abs(it.value()));
    }
  }
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (SparseRows::InnerIterator it(out.features, i); it; ++it) {
      if (col_max[it.index()] > 0.0) it.valueRef() /= col_max[it.index()];
    }
  }
  out.provenance = ds.provenance + "|maxabs";
  return out;
}

Dataset synthetic_onehot(std::size_t rows, const std::vector<int>& levels, std::uint64_t seed,
                         double label_noise) {
  if (rows < 1 || levels.empty()) throw ArgumentError("synthetic_onehot: need rows >= 1 and >= 1 attribute");
  if (!(label_noise >= 0.0 && label_noise < 0.5)) throw ArgumentError("synthetic_onehot: label noise in [0, 0.5)");
  Eigen::Index dim = 0;
  std::vector<Eigen::Index> offset;
  for (int l : levels) {
    if (l < 1) throw ArgumentError("synthetic_onehot: every attribute needs >= 1 level");
    offset.push_back(dim);
    dim += l;
  }
  RngStream rng(seed, 0, 0xda7a);
  // Planted model: a few informative attributes with strong level effects.
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(dim);
  for (std::size_t g = 0; g < levels.size(); ++g) {
    const double strength = (g % 4 == 0) ? 2.0 : 0.3;
    for (int l = 0; l < levels[g]; ++l) weights[offset[g] + l] = strength * rng.normal();
  }
  // Skewed level frequencies, as in real categorical data.
  std::vector<std::vector<double>> cdf(levels.size());
  for (std::size_t g = 0; g < levels.size(); ++g) {
    double acc = 0.0;
    for (int l = 0; l < levels[g]; ++l) {
      acc += 1.0 / (1.0 + l);
      cdf[g].push_back(acc);
    }
    for (double& c : cdf[g]) c /= acc;
  }
  std::vector<Triplet> entries;
  entries.reserve(rows * levels.size());
  Dataset ds;
  ds.labels.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    double score = 0.0;
    for (std::size_t g = 0; g < levels.size(); ++g) {
      const double u = rng.uniform();
      const auto it = std::upper_bound(cdf[g].begin(), cdf[g].end(), u);
      const auto level = std::min<Eigen::Index>(it - cdf[g].begin(), levels[g] - 1);
      const Eigen::Index col = offset[g] + level;
      entries.emplace_back(static_cast<Eigen::Index>(r), col, 1.0);
      score += weights[col];
    }
    double label = score > 0.0 ? 1.0 : -1.0;
    if (rng.uniform() < label_noise) label = -label;
    ds.labels[static_cast<Eigen::Index>(r)] = label;
  }
  ds.features.resize(static_cast<Eigen::Index>(rows), dim);
  ds.features.setFromTriplets(entries.begin(), entries.end());
  ds.features.makeCompressed();
  ds.name = "synthetic_onehot";
  std::ostringstream prov;
  prov << "synthetic_onehot(rows=" << rows << ", attributes=" << levels.size() << ", d=" << dim
       << ", seed=" << seed << ")";
  ds.provenance = prov.str();
  ds.source_checksum = checksum_bytes(prov.str());
  return ds;
}

}  // namespace adaprox
