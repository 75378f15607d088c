#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dsparam/narmax.hpp"
#include "dsparam/polyar.hpp"

namespace dsparam::io {

// FNV-1a 64-bit over a byte buffer; the project-wide content hash.
std::uint64_t fnv1a(const void* data, std::size_t size);
std::uint64_t fnv1a(const std::string& s);

// Hash of a file's raw bytes. Throws IoError if unreadable.
std::uint64_t hash_file(const std::string& path);

// Fixed-width lowercase hex (16 digits) used wherever hashes are printed.
std::string hash_hex(std::uint64_t h);

// Writes a numeric CSV: optional "# key=value" comment lines, a header
// row, then data rows with 12 significant digits, newline-terminated.
void write_csv(const std::string& path, const std::vector<std::string>& comments,
               const std::vector<std::string>& header, const Eigen::MatrixXd& rows);

// Reads a numeric CSV written by write_csv (comment lines skipped, header
// required). Throws IoError on missing file or malformed rows.
struct CsvData {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};
CsvData read_csv(const std::string& path);

// Formats one double with 12 significant digits (%.12g).
std::string format_g12(double v);

// Reads/writes a whole file as bytes. Throw IoError on failure.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Provenance attached to fitted-parameter artifacts.
struct ArtifactMeta {
  double delta = 0.0;
  std::uint64_t seed = 0;
  std::string data_hash;    // hex hash of the dataset CSV the fit consumed
  std::string config_hash;  // hex hash of the producing configuration
};

// JSON (de)serialization of fitted parameters. The schema is stable:
//   { "structure": {p, r, s, q, d_x, d_R},
//     "coefficients": {mu, a[], b[][], c[][], d[]},
//     "sigma2": ..., "meta": {delta, seed, data_hash, config_hash} }
// and for the baseline { "poly": [...], "phi": ..., "sigma": ...,
//                        "delta": ..., "meta": {...} }.
std::string narmax_params_to_json(const NarmaxStructure& st, const NarmaxParams& params,
                                  const ArtifactMeta& meta);
void narmax_params_from_json(const std::string& text, NarmaxStructure& st, NarmaxParams& params,
                             ArtifactMeta& meta);

std::string polyar_params_to_json(const PolyarParams& params, const ArtifactMeta& meta);
void polyar_params_from_json(const std::string& text, PolyarParams& params, ArtifactMeta& meta);

}  // namespace dsparam::io
