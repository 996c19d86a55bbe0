#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rada/errors.hpp"
#include "rada/trainer.hpp"

namespace rada {

namespace {

constexpr const char* kMagic = "rada-checkpoint";
constexpr int kVersion = 1;

void write_matrices(std::ostream& out, const char* tag, char which,
                    const std::vector<Matrix>& layers) {
  out << tag << ' ' << which << ' ' << layers.size() << '\n';
  for (const auto& m : layers) {
    out << "matrix " << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? " " : "") << format_double(m(r, c));
      out << '\n';
    }
  }
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string> next(const char* expecting) {
    std::string line;
    if (!std::getline(in_, line))
      throw FormatError(std::string("unexpected end of checkpoint, expected ") + expecting, line_ + 1);
    ++line_;
    std::istringstream ss(line);
    std::vector<std::string> fields;
    for (std::string f; ss >> f;) fields.push_back(f);
    return fields;
  }

  std::size_t line() const { return line_; }

  [[noreturn]] void fail(const std::string& what) const { throw FormatError(what, line_); }

  std::size_t count(const std::string& s) const {
    std::size_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail("expected a count, got '" + s + "'");
    return v;
  }

  double real(const std::string& s) const {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail("expected a number, got '" + s + "'");
    return v;
  }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

std::vector<Matrix> read_matrices(LineReader& rd, const char* tag, char which) {
  const auto head = rd.next(tag);
  if (head.size() != 3 || head[0] != tag || head[1] != std::string(1, which))
    rd.fail(std::string("expected '") + tag + ' ' + which + " <layers>'");
  const std::size_t n = rd.count(head[2]);
  std::vector<Matrix> layers;
  for (std::size_t l = 0; l < n; ++l) {
    const auto shape = rd.next("matrix header");
    if (shape.size() != 3 || shape[0] != "matrix") rd.fail("expected 'matrix <rows> <cols>'");
    Matrix m(rd.count(shape[1]), rd.count(shape[2]));
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const auto row = rd.next("matrix row");
      if (row.size() != m.cols())
        rd.fail("expected " + std::to_string(m.cols()) + " values, got " + std::to_string(row.size()));
      for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rd.real(row[c]);
    }
    layers.push_back(std::move(m));
  }
  return layers;
}

void check_like(const LineReader& rd, const NetworkParams& p, const Gradients& g, char which) {
  bool ok = p.layers.size() == g.layers.size();
  for (std::size_t l = 0; ok && l < p.layers.size(); ++l)
    ok = p.layers[l].rows() == g.layers[l].rows() && p.layers[l].cols() == g.layers[l].cols();
  if (!ok) rd.fail(std::string("velocity of network ") + which + " does not match its parameters");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainState& state,
                     const TrainConfig& cfg) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << kMagic << ' ' << kVersion << '\n';
  const auto kv = cfg.to_key_values();
  out << "config " << kv.size() << '\n';
  for (const auto& [k, v] : kv) out << k << ' ' << v << '\n';
  out << "epochs_completed " << state.epochs_completed << '\n';
  write_matrices(out, "network", 'f', state.model.g_f.layers);
  write_matrices(out, "network", 'y', state.model.g_y.layers);
  write_matrices(out, "network", 'd', state.model.g_d.layers);
  write_matrices(out, "velocity", 'f', state.velocity.f.layers);
  write_matrices(out, "velocity", 'y', state.velocity.y.layers);
  write_matrices(out, "velocity", 'd', state.velocity.d.layers);
  if (!out) throw Error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string(), 0);
  LineReader rd(in);

  const auto magic = rd.next("header");
  if (magic.size() != 2 || magic[0] != kMagic) rd.fail("not a checkpoint file");
  if (rd.count(magic[1]) != kVersion) rd.fail("unsupported checkpoint version " + magic[1]);

  const auto cfg_head = rd.next("config header");
  if (cfg_head.size() != 2 || cfg_head[0] != "config") rd.fail("expected 'config <entries>'");
  std::map<std::string, std::string> kv;
  for (std::size_t i = rd.count(cfg_head[1]); i > 0; --i) {
    const auto entry = rd.next("config entry");
    if (entry.size() != 2) rd.fail("expected '<key> <value>'");
    kv[entry[0]] = entry[1];
  }

  Checkpoint ck;
  try {
    ck.config = TrainConfig::from_key_values(kv);
  } catch (const ConfigError& e) {
    rd.fail(std::string("bad config entry: ") + e.what());
  }

  const auto done = rd.next("epochs_completed");
  if (done.size() != 2 || done[0] != "epochs_completed") rd.fail("expected 'epochs_completed <n>'");
  ck.state.epochs_completed = rd.count(done[1]);

  ck.state.model.g_f.layers = read_matrices(rd, "network", 'f');
  ck.state.model.g_y.layers = read_matrices(rd, "network", 'y');
  ck.state.model.g_d.layers = read_matrices(rd, "network", 'd');
  ck.state.velocity.f.layers = read_matrices(rd, "velocity", 'f');
  ck.state.velocity.y.layers = read_matrices(rd, "velocity", 'y');
  ck.state.velocity.d.layers = read_matrices(rd, "velocity", 'd');
  try {
    ck.state.model.validate();
  } catch (const Error& e) {
    rd.fail(std::string("inconsistent model: ") + e.what());
  }
  check_like(rd, ck.state.model.g_f, ck.state.velocity.f, 'f');
  check_like(rd, ck.state.model.g_y, ck.state.velocity.y, 'y');
  check_like(rd, ck.state.model.g_d, ck.state.velocity.d, 'd');
  return ck;
}

}  // namespace rada
