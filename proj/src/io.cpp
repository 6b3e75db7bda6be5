#include "strongsig/io.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "strongsig/errors.hpp"

namespace strongsig {

std::string format_double(double v) {
  char buf[32];
  // %.17g round-trips every double; trim to the shortest representation that
  // still round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

double parse_double(const std::string& s, const std::string& path,
                    std::size_t line_no) {
  double v;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw input_error(path + ":" + std::to_string(line_no) +
                      ": not a number: '" + s + "'");
  }
  return v;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw input_error("cannot open file: " + path);
  }
  return in;
}

}  // namespace

ReplicateMatrix read_matrix_tsv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  std::size_t line_no = 0;

  ReplicateMatrix m;
  if (!std::getline(in, line)) {
    throw input_error(path + ":1: empty file");
  }
  ++line_no;
  const std::vector<std::string> header = split_tabs(line);
  if (header.size() < 2 || header[0] != "gene_id") {
    throw input_error(path + ":1: header must start with 'gene_id' and have "
                      "at least one sample column");
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    // sample:group[:batch]
    std::vector<std::string> parts;
    std::stringstream ss(header[j]);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() < 2 || parts.size() > 3) {
      throw input_error(path + ":1: bad column spec '" + header[j] +
                        "' (want sample:group[:batch])");
    }
    Group g;
    if (parts[1] == "experiment") {
      g = Group::experiment;
    } else if (parts[1] == "control") {
      g = Group::control;
    } else {
      throw input_error(path + ":1: group must be 'experiment' or 'control' "
                        "in '" + header[j] + "'");
    }
    m.sample_names.push_back(parts[0]);
    m.groups.push_back(g);
    m.batches.push_back(parts.size() == 3 ? parts[2] : "");
  }

  const std::size_t n_cols = m.groups.size();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != n_cols + 1) {
      throw input_error(path + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(n_cols + 1) + " fields, got " +
                        std::to_string(fields.size()));
    }
    m.gene_ids.push_back(fields[0]);
    for (std::size_t j = 0; j < n_cols; ++j) {
      m.values.push_back(parse_double(fields[j + 1], path, line_no));
    }
  }
  if (m.gene_ids.empty()) {
    throw input_error(path + ": no gene rows");
  }
  return m;
}

std::vector<GeneSummary> read_summary_tsv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<GeneSummary> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 4) {
      throw input_error(path + ":" + std::to_string(line_no) +
                        ": expected 4 tab-separated fields");
    }
    if (line_no == 1 && fields[0] == "gene_id") continue;  // header
    GeneSummary g;
    g.id = fields[0];
    g.xbar = parse_double(fields[1], path, line_no);
    g.s2 = parse_double(fields[2], path, line_no);
    g.df_sigma = parse_double(fields[3], path, line_no);
    if (!(g.s2 >= 0.0) || !(g.df_sigma > 0.0)) {
      throw input_error(path + ":" + std::to_string(line_no) +
                        ": s2 must be >= 0 and df > 0");
    }
    out.push_back(std::move(g));
  }
  if (out.empty()) {
    throw input_error(path + ": no summary rows");
  }
  return out;
}

void write_summary_tsv(const std::string& path,
                       const std::vector<GeneSummary>& summaries) {
  std::ofstream out(path);
  if (!out) {
    throw input_error("cannot write file: " + path);
  }
  out << "gene_id\txbar\ts2\tdf\n";
  for (const GeneSummary& g : summaries) {
    out << g.id << '\t' << format_double(g.xbar) << '\t'
        << format_double(g.s2) << '\t' << format_double(g.df_sigma) << '\n';
  }
}

std::vector<double> read_variance_file(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const double v = parse_double(line, path, line_no);
    if (!(v >= 0.0)) {
      throw input_error(path + ":" + std::to_string(line_no) +
                        ": variance must be >= 0");
    }
    out.push_back(v);
  }
  return out;
}

std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw input_error("cannot open file: " + path);
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace strongsig
