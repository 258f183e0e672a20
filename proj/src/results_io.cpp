#include <charconv>
#include <sstream>

#include "alstop/error.hpp"
#include "alstop/harness.hpp"

namespace alstop {

namespace {

constexpr const char* kHeader =
    "dataset,model,repeat,criterion,status,stopped,stop_round,labels_used,accuracy,correlation,note";

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

template <class T>
T parse(const std::string& s, std::size_t line) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw DataError("decisions line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

}  // namespace

std::string decisions_to_csv(const std::vector<DecisionRow>& rows) {
  std::ostringstream ss;
  ss << kHeader << '\n';
  for (const auto& r : rows) {
    ss << quote(r.dataset) << ',' << quote(r.model) << ',' << r.repeat << ',' << r.criterion << ',' << r.status << ','
       << (r.stopped ? 1 : 0) << ',' << (r.stop_round ? std::to_string(*r.stop_round) : "") << ',' << r.labels_used
       << ',' << num(r.accuracy) << ',' << (r.correlation ? num(*r.correlation) : "") << ',' << quote(r.note) << '\n';
  }
  return ss.str();
}

std::vector<DecisionRow> decisions_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw DataError("decisions file has an unexpected header");
  std::vector<DecisionRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 11) throw DataError("decisions line " + std::to_string(lineno) + ": expected 11 fields");
    DecisionRow r;
    r.dataset = f[0];
    r.model = f[1];
    r.repeat = parse<std::size_t>(f[2], lineno);
    r.criterion = f[3];
    r.status = f[4];
    r.stopped = f[5] == "1";
    if (!f[6].empty()) r.stop_round = parse<std::size_t>(f[6], lineno);
    r.labels_used = parse<std::size_t>(f[7], lineno);
    r.accuracy = parse<double>(f[8], lineno);
    if (!f[9].empty()) r.correlation = parse<double>(f[9], lineno);
    r.note = f[10];
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace alstop
