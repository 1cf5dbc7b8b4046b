#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace adaprox {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Binary classification data: one sparse row per sample, labels in {-1, +1}.
struct Dataset {
  SparseRows features;
  Eigen::VectorXd labels;
  std::string name;
  /// FNV-1a 64 of the decompressed source bytes, hex encoded.
  std::string source_checksum;
  /// How the dataset was derived ("file:<path>", "subsample(parent,seed,n)", ...).
  std::string provenance;

  Eigen::Index rows() const noexcept { return features.rows(); }
  Eigen::Index cols() const noexcept { return features.cols(); }
};

/// How raw labels are mapped onto {-1, +1}.
///
/// kBinary resolves by the set of distinct raw labels: {-1,+1} is kept,
/// {0,1} maps 0 -> -1, {1,2} maps 1 -> -1 and 2 -> +1. kDigits maps
/// {0..4} -> -1 and {5..9} -> +1 (MNIST-style files).
enum class LabelScheme { kBinary, kDigits };

/// Reads LIBSVM/SVMlight text ("<label> <idx>:<val> ..."), 1-based indices,
/// strictly increasing within a line. Files ending in ".gz" are inflated.
Dataset read_libsvm(const std::filesystem::path& path,
                    std::optional<Eigen::Index> expected_dim = std::nullopt,
                    LabelScheme scheme = LabelScheme::kBinary);

Dataset parse_libsvm(std::istream& in, const std::string& name,
                     std::optional<Eigen::Index> expected_dim = std::nullopt,
                     LabelScheme scheme = LabelScheme::kBinary);

/// Writes with 17 significant digits so that a re-read is exact.
void write_libsvm(const Dataset& ds, const std::filesystem::path& path);
void write_libsvm(const Dataset& ds, std::ostream& out);

/// Seeded uniform subset of n rows, without replacement, in parent order.
Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed);

enum class FeatureScaling { kNone, kMaxAbsPerColumn };

Dataset scale_features(const Dataset& ds, FeatureScaling mode);

std::string checksum_bytes(const std::string& bytes);

/// One-hot categorical data with labels from a planted sparse logistic model.
/// `levels[g]` is the number of categories of attribute g; every row has
/// exactly one active column per attribute. Used as a stand-in when a real
/// categorical dataset is unavailable.
Dataset synthetic_onehot(std::size_t rows, const std::vector<int>& levels, std::uint64_t seed,
                         double label_noise = 0.05);

}  // namespace adaprox
