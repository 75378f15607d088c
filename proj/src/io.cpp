#include "dsparam/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dsparam/errors.hpp"

namespace dsparam::io {

using nlohmann::json;

std::uint64_t fnv1a(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

std::uint64_t hash_file(const std::string& path) { return fnv1a(read_file(path)); }

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& comments,
               const std::vector<std::string>& header, const Eigen::MatrixXd& rows) {
  if (header.size() != static_cast<std::size_t>(rows.cols()))
    throw ConfigError("csv: header entries must match the column count");
  std::string out;
  out.reserve(static_cast<std::size_t>(rows.size()) * 16 + 256);
  for (const auto& c : comments) {
    out += "# ";
    out += c;
    out += '\n';
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      if (j) out += ',';
      std::snprintf(buf, sizeof(buf), "%.12g", rows(i, j));
      out += buf;
    }
    out += '\n';
  }
  write_file(path, out);
}

CsvData read_csv(const std::string& path) {
  const std::string text = read_file(path);
  CsvData out;
  std::vector<std::vector<double>> values;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    if (!have_header) {
      std::size_t start = 0;
      while (start <= line.size()) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) comma = line.size();
        out.header.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
      }
      have_header = true;
      continue;
    }
    std::vector<double> row;
    row.reserve(out.header.size());
    const char* ptr = line.data();
    const char* last = line.data() + line.size();
    while (ptr <= last) {
      double v = 0.0;
      const auto [next, ec] = std::from_chars(ptr, last, v);
      if (ec != std::errc()) throw IoError("csv: malformed number in " + path);
      row.push_back(v);
      if (next == last) break;
      if (*next != ',') throw IoError("csv: expected ',' in " + path);
      ptr = next + 1;
    }
    if (row.size() != out.header.size())
      throw IoError("csv: row width does not match header in " + path);
    values.push_back(std::move(row));
  }
  if (!have_header) throw IoError("csv: missing header in " + path);
  out.values.resize(static_cast<Eigen::Index>(values.size()),
                    static_cast<Eigen::Index>(out.header.size()));
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = 0; j < values[i].size(); ++j)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i][j];
  return out;
}

namespace {

json meta_to_json(const ArtifactMeta& meta) {
  return json{{"delta", meta.delta},
              {"seed", meta.seed},
              {"data_hash", meta.data_hash},
              {"config_hash", meta.config_hash}};
}

ArtifactMeta meta_from_json(const json& j) {
  ArtifactMeta meta;
  meta.delta = j.at("delta").get<double>();
  meta.seed = j.at("seed").get<std::uint64_t>();
  meta.data_hash = j.at("data_hash").get<std::string>();
  meta.config_hash = j.at("config_hash").get<std::string>();
  return meta;
}

std::vector<std::vector<double>> matrix_to_rows(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  }
  return rows;
}

Eigen::MatrixXd rows_to_matrix(const std::vector<std::vector<double>>& rows, int cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<int>(rows[i].size()) != cols)
      throw IoError("params json: ragged coefficient matrix");
    for (int j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), j) = rows[i][j];
  }
  return m;
}

}  // namespace

std::string narmax_params_to_json(const NarmaxStructure& st, const NarmaxParams& params,
                                  const ArtifactMeta& meta) {
  params.validate(st);
  json j;
  j["structure"] = {{"p", st.p}, {"r", st.r},     {"s", st.s},
                    {"q", st.q}, {"d_x", st.d_x}, {"d_R", st.d_R}};
  j["coefficients"] = {{"mu", params.mu},
                       {"a", std::vector<double>(params.a.data(), params.a.data() + params.a.size())},
                       {"b", matrix_to_rows(params.b)},
                       {"c", matrix_to_rows(params.c)},
                       {"d", std::vector<double>(params.d.data(), params.d.data() + params.d.size())}};
  j["sigma2"] = params.sigma2;
  j["meta"] = meta_to_json(meta);
  return j.dump(2) + "\n";
}

void narmax_params_from_json(const std::string& text, NarmaxStructure& st, NarmaxParams& params,
                             ArtifactMeta& meta) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("params json: parse error: ") + e.what());
  }
  try {
    const json& s = j.at("structure");
    st.p = s.at("p").get<int>();
    st.r = s.at("r").get<int>();
    st.s = s.at("s").get<int>();
    st.q = s.at("q").get<int>();
    st.d_x = s.at("d_x").get<int>();
    st.d_R = s.at("d_R").get<int>();
    const json& c = j.at("coefficients");
    params.mu = c.at("mu").get<double>();
    const auto a = c.at("a").get<std::vector<double>>();
    params.a = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
    params.b = rows_to_matrix(c.at("b").get<std::vector<std::vector<double>>>(), st.d_x);
    params.c = rows_to_matrix(c.at("c").get<std::vector<std::vector<double>>>(), st.d_R);
    const auto d = c.at("d").get<std::vector<double>>();
    params.d = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
    params.sigma2 = j.at("sigma2").get<double>();
    meta = meta_from_json(j.at("meta"));
  } catch (const json::exception& e) {
    throw IoError(std::string("params json: missing or mistyped field: ") + e.what());
  }
  params.validate(st);
}

std::string polyar_params_to_json(const PolyarParams& params, const ArtifactMeta& meta) {
  params.validate();
  json j;
  j["poly"] = std::vector<double>(params.poly.data(), params.poly.data() + params.poly.size());
  j["phi"] = params.phi;
  j["sigma"] = params.sigma;
  j["delta"] = params.delta;
  j["meta"] = meta_to_json(meta);
  return j.dump(2) + "\n";
}

void polyar_params_from_json(const std::string& text, PolyarParams& params, ArtifactMeta& meta) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("params json: parse error: ") + e.what());
  }
  try {
    const auto poly = j.at("poly").get<std::vector<double>>();
    params.poly =
        Eigen::Map<const Eigen::VectorXd>(poly.data(), static_cast<Eigen::Index>(poly.size()));
    params.phi = j.at("phi").get<double>();
    params.sigma = j.at("sigma").get<double>();
    params.delta = j.at("delta").get<double>();
    meta = meta_from_json(j.at("meta"));
  } catch (const json::exception& e) {
    throw IoError(std::string("params json: missing or mistyped field: ") + e.what());
  }
  params.validate();
}

}  // namespace dsparam::io
