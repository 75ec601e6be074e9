#include "ktgnn/io.hpp"

#include "ktgnn/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace ktgnn {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_decimal(double v, int digits) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, digits);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_decimal(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

namespace {

struct TsvRow {
  std::size_t line = 0;
  std::vector<std::string> cells;
};

struct TsvFile {
  std::string path;
  std::vector<std::string> header;
  std::vector<TsvRow> rows;

  [[noreturn]] void fail(std::size_t line, const std::string& msg) const {
    throw DataError(path + ":" + std::to_string(line) + ": " + msg);
  }
};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

TsvFile read_tsv(const fs::path& path, std::size_t expected_cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  TsvFile f;
  f.path = path.string();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_tabs(line);
    if (f.header.empty()) {
      f.header = std::move(cells);
      if (f.header.size() != expected_cols)
        f.fail(lineno, "header has " + std::to_string(f.header.size()) + " columns, expected " +
                           std::to_string(expected_cols));
      continue;
    }
    if (cells.size() != expected_cols)
      f.fail(lineno, "row has " + std::to_string(cells.size()) + " columns, expected " +
                         std::to_string(expected_cols));
    f.rows.push_back({lineno, std::move(cells)});
  }
  if (f.header.empty()) throw DataError(path.string() + ": missing header row");
  return f;
}

double cell_number(const TsvFile& f, const TsvRow& row, std::size_t col) {
  auto v = parse_decimal(row.cells[col]);
  if (!v) f.fail(row.line, "non-numeric cell '" + row.cells[col] + "'");
  return *v;
}

class IdMap {
 public:
  void add(const TsvFile& f, const TsvRow& row, const std::string& token) {
    if (!ids_.emplace(token, static_cast<Index>(ids_.size())).second)
      f.fail(row.line, "duplicate node id '" + token + "'");
  }
  Index at(const TsvFile& f, const TsvRow& row, const std::string& token) const {
    auto it = ids_.find(token);
    if (it == ids_.end()) f.fail(row.line, "unknown node id '" + token + "'");
    return it->second;
  }
  [[nodiscard]] std::size_t size() const { return ids_.size(); }

 private:
  std::unordered_map<std::string, Index> ids_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

}  // namespace

json DatasetManifest::to_json() const {
  json files = {{"edges", edges},
                {"features_obs", features_obs},
                {"features_unobs_vocal", features_unobs_vocal},
                {"population", population},
                {"labels", labels}};
  if (split) files["split"] = *split;
  return {{"format_version", format_version}, {"name", name},   {"num_nodes", num_nodes},
          {"d_obs", d_obs},                   {"d_unobs", d_unobs}, {"files", files}};
}

DatasetManifest DatasetManifest::from_json(const json& j) {
  try {
    DatasetManifest m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kFormatVersion)
      throw DataError("unsupported manifest format_version " + std::to_string(m.format_version));
    m.name = j.value("name", std::string());
    m.num_nodes = j.at("num_nodes").get<Index>();
    m.d_obs = j.at("d_obs").get<Index>();
    m.d_unobs = j.at("d_unobs").get<Index>();
    const json& files = j.at("files");
    m.edges = files.at("edges").get<std::string>();
    m.features_obs = files.at("features_obs").get<std::string>();
    m.features_unobs_vocal = files.at("features_unobs_vocal").get<std::string>();
    m.population = files.at("population").get<std::string>();
    m.labels = files.at("labels").get<std::string>();
    if (files.contains("split")) m.split = files.at("split").get<std::string>();
    if (m.num_nodes < 0 || m.d_obs < 0 || m.d_unobs < 0) throw DataError("manifest: negative size");
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
}

DatasetManifest read_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest " + manifest_path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("manifest " + manifest_path.string() + ": " + e.what());
  }
  return DatasetManifest::from_json(j);
}

VSGraph load_dataset(const fs::path& manifest_path) {
  const DatasetManifest m = read_manifest(manifest_path);
  const fs::path dir = manifest_path.parent_path();
  const Index n = m.num_nodes;

  GraphInput in;
  in.num_nodes = n;
  in.d_unobs = m.d_unobs;

  IdMap ids;
  {
    const TsvFile f = read_tsv(dir / m.population, 2);
    for (const auto& row : f.rows) {
      ids.add(f, row, row.cells[0]);
      const std::string& p = row.cells[1];
      if (p == "vocal" || p == "0") in.population.push_back(Population::Vocal);
      else if (p == "silent" || p == "1") in.population.push_back(Population::Silent);
      else f.fail(row.line, "unknown population '" + p + "'");
    }
    if (static_cast<Index>(ids.size()) != n)
      throw DataError(f.path + ": " + std::to_string(ids.size()) + " nodes, manifest declares " +
                      std::to_string(n));
  }
  {
    const TsvFile f = read_tsv(dir / m.edges, 2);
    in.edges.reserve(f.rows.size());
    for (const auto& row : f.rows) in.edges.emplace_back(ids.at(f, row, row.cells[0]), ids.at(f, row, row.cells[1]));
  }
  {
    const TsvFile f = read_tsv(dir / m.features_obs, static_cast<std::size_t>(m.d_obs) + 1);
    in.x_obs = Mat::Zero(n, m.d_obs);
    std::vector<std::uint8_t> seen(n, 0);
    for (const auto& row : f.rows) {
      const Index i = ids.at(f, row, row.cells[0]);
      if (seen[i]) f.fail(row.line, "duplicate row for node '" + row.cells[0] + "'");
      seen[i] = 1;
      for (Index c = 0; c < m.d_obs; ++c) in.x_obs(i, c) = cell_number(f, row, c + 1);
    }
    for (Index i = 0; i < n; ++i)
      if (!seen[i]) throw DataError(f.path + ": no observable features for node " + std::to_string(i));
  }
  {
    const TsvFile f = read_tsv(dir / m.features_unobs_vocal, static_cast<std::size_t>(m.d_unobs) + 1);
    in.x_unobs_vocal.values.resize(static_cast<Index>(f.rows.size()), m.d_unobs);
    for (std::size_t k = 0; k < f.rows.size(); ++k) {
      const auto& row = f.rows[k];
      const Index i = ids.at(f, row, row.cells[0]);
      if (in.population[i] != Population::Vocal)
        f.fail(row.line, "node '" + row.cells[0] + "' is silent but has unobservable features");
      in.x_unobs_vocal.ids.push_back(i);
      for (Index c = 0; c < m.d_unobs; ++c) in.x_unobs_vocal.values(static_cast<Index>(k), c) = cell_number(f, row, c + 1);
    }
  }
  {
    const TsvFile f = read_tsv(dir / m.labels, 2);
    in.labels.assign(n, kNoLabel);
    for (const auto& row : f.rows) {
      const double v = cell_number(f, row, 1);
      if (v != 0.0 && v != 1.0 && v != -1.0) f.fail(row.line, "label must be 0, 1 or -1");
      in.labels[ids.at(f, row, row.cells[0])] = static_cast<int>(v);
    }
  }
  if (m.split) {
    const TsvFile f = read_tsv(dir / *m.split, 2);
    in.split.assign(n, Split::None);
    for (const auto& row : f.rows) {
      try {
        in.split[ids.at(f, row, row.cells[0])] = parse_split(row.cells[1]);
      } catch (const DataError& e) {
        f.fail(row.line, e.what());
      }
    }
  }
  return build_graph(std::move(in));
}

fs::path save_dataset(const VSGraph& g, const fs::path& dir, const std::string& name, bool write_split) {
  fs::create_directories(dir);
  DatasetManifest m;
  m.name = name;
  m.num_nodes = g.num_nodes();
  m.d_obs = g.d_obs();
  m.d_unobs = g.d_unobs();
  if (write_split) m.split = "split.tsv";

  auto header = [](const char* prefix, Index width) {
    std::string h = "node_id";
    for (Index c = 0; c < width; ++c) h += "\t" + std::string(prefix) + std::to_string(c);
    return h + "\n";
  };
  std::ostringstream pop, edges, obs, unobs, labels, split;
  pop << "node_id\tpopulation\n";
  edges << "src\tdst\n";
  obs << header("o", g.d_obs());
  unobs << header("u", g.d_unobs());
  labels << "node_id\tlabel\n";
  split << "node_id\tsplit\n";
  for (Index i = 0; i < g.num_nodes(); ++i) {
    pop << i << '\t' << (g.is_vocal(i) ? "vocal" : "silent") << '\n';
    obs << i;
    for (Index c = 0; c < g.d_obs(); ++c) obs << '\t' << format_decimal(g.x_obs()(i, c));
    obs << '\n';
    if (g.is_vocal(i)) {
      unobs << i;
      for (Index c = 0; c < g.d_unobs(); ++c) unobs << '\t' << format_decimal(g.x_unobs()(i, c));
      unobs << '\n';
    }
    labels << i << '\t' << g.labels()[i] << '\n';
    split << i << '\t' << to_string(g.split()[i]) << '\n';
  }
  for (auto [a, b] : g.undirected_edges()) edges << a << '\t' << b << '\n';

  write_text(dir / m.population, pop.str());
  write_text(dir / m.edges, edges.str());
  write_text(dir / m.features_obs, obs.str());
  write_text(dir / m.features_unobs_vocal, unobs.str());
  write_text(dir / m.labels, labels.str());
  if (write_split) write_text(dir / *m.split, split.str());
  const fs::path manifest = dir / "manifest.json";
  write_text(manifest, m.to_json().dump(2) + "\n");
  return manifest;
}

VSGraph round_features(const VSGraph& g) {
  GraphInput in = g.to_input();
  auto round = [](Mat& m) {
    for (Index k = 0; k < m.size(); ++k) m.data()[k] = *parse_decimal(format_decimal(m.data()[k]));
  };
  round(in.x_obs);
  round(in.x_unobs_vocal.values);
  return build_graph(std::move(in));
}

}  // namespace ktgnn
