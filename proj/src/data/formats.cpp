#include "discoder/data/formats.hpp"

#include "discoder/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace discoder::data {
namespace {

std::string where(const std::filesystem::path& p, std::size_t line) {
  return p.string() + ":" + std::to_string(line) + ": ";
}

std::optional<std::size_t> parse_label(const std::string& tok, const std::string& ctx) {
  if (tok == "?") return std::nullopt;
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) throw FormatError(ctx + "label: cannot parse '" + tok + "'");
  return v;
}

double parse_double(const std::string& tok, const std::string& ctx) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw FormatError(ctx + "cannot parse number '" + tok + "'");
  }
}

std::optional<std::string> header_value(const std::string& line, const std::string& key) {
  const auto pos = line.find(key + "=");
  if (pos == std::string::npos) return std::nullopt;
  std::istringstream is(line.substr(pos + key.size() + 1));
  std::string v;
  is >> v;
  return v;
}

void push_label(std::optional<Labels>& labels, std::optional<std::size_t> label, std::size_t row,
                const std::string& ctx) {
  if (row == 0 && label) labels.emplace();
  if (labels.has_value() != label.has_value())
    throw FormatError(ctx + "label: mix of labelled and unlabelled rows");
  if (label) labels->push_back(*label);
}

}  // namespace

SparseDataset read_sparse_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  SparseDataset ds;
  std::optional<std::size_t> declared_vocab;
  std::size_t max_term = 0;
  bool any_term = false;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (auto v = header_value(line, "vocab_size")) declared_vocab = std::stoull(*v);
      continue;
    }
    const std::string ctx = where(path, lineno);
    std::istringstream is(line);
    std::string tok;
    is >> tok;
    push_label(ds.labels, parse_label(tok, ctx), ds.docs.size(), ctx);
    std::map<std::uint32_t, double> row;
    while (is >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw FormatError(ctx + "entry '" + tok + "' is not term:weight");
      std::uint32_t term = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + colon, term);
      if (ec != std::errc() || ptr != tok.data() + colon) throw FormatError(ctx + "term: cannot parse '" + tok + "'");
      row[term] += parse_double(tok.substr(colon + 1), ctx);
      max_term = std::max<std::size_t>(max_term, term);
      any_term = true;
    }
    SparseRow r;
    for (const auto& [t, w] : row) r.push_back({t, w});
    ds.docs.push_back(std::move(r));
  }
  ds.vocab_size = declared_vocab.value_or(any_term ? max_term + 1 : 0);
  ds.validate();
  return ds;
}

void write_sparse_text(const std::filesystem::path& path, const SparseDataset& ds) {
  ds.validate();
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "# discoder sparse vocab_size=" << ds.vocab_size << '\n';
  for (std::size_t d = 0; d < ds.docs.size(); ++d) {
    out << (ds.labels ? std::to_string((*ds.labels)[d]) : std::string("?"));
    for (const auto& e : ds.docs[d]) out << ' ' << e.term << ':' << fmt::format("{}", e.weight);
    out << '\n';
  }
}

DenseDataset read_dense_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  DenseDataset ds;
  std::optional<std::size_t> dim;
  std::vector<double> values;
  std::size_t rows = 0;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (auto v = header_value(line, "dim")) dim = std::stoull(*v);
      if (auto v = header_value(line, "normalization")) ds.normalization = parse_normalization(*v);
      continue;
    }
    const std::string ctx = where(path, lineno);
    std::istringstream is(line);
    std::string tok;
    std::getline(is, tok, ',');
    push_label(ds.labels, parse_label(tok, ctx), rows, ctx);
    std::size_t cols = 0;
    while (std::getline(is, tok, ',')) {
      values.push_back(parse_double(tok, ctx));
      ++cols;
    }
    if (!dim) dim = cols;
    if (cols != *dim)
      throw FormatError(ctx + "row has " + std::to_string(cols) + " features, expected " + std::to_string(*dim));
    ++rows;
  }
  ds.features.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim.value_or(0)));
  std::copy(values.begin(), values.end(), ds.features.data());
  ds.validate();
  return ds;
}

void write_dense_csv(const std::filesystem::path& path, const DenseDataset& ds) {
  ds.validate();
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "# discoder dense dim=" << ds.dim() << " normalization=" << to_string(ds.normalization) << '\n';
  std::string row;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    row = ds.labels ? std::to_string((*ds.labels)[i]) : std::string("?");
    for (std::size_t j = 0; j < ds.dim(); ++j)
      row += fmt::format(",{}", ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    out << row << '\n';
  }
}

std::string file_fingerprint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return fmt::format("{:016x}", h);
}

}  // namespace discoder::data
