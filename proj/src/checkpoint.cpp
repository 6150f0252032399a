#include "mired/checkpoint.hpp"

#include <sstream>

#include "mired/error.hpp"
#include "mired/textio.hpp"

namespace mired {

namespace {

void write_values(std::string& out, const char* tag, std::span<const double> values) {
  out += tag;
  for (double v : values) out += " " + text::format_double17(v);
  out += "\n";
}

void write_layer(std::string& out, const char* part, std::size_t index, const DenseLayer& layer) {
  out += std::string("layer ") + part + " " + std::to_string(index) + " " +
         std::to_string(layer.spec.in_dim) + " " + std::to_string(layer.spec.out_dim) + " " +
         to_string(layer.spec.activation) + "\n";
  for (std::size_t r = 0; r < layer.weights.rows(); ++r) write_values(out, "w", layer.weights.row(r));
  write_values(out, "b", layer.bias);
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines_.push_back(line);
  }

  bool done() const { return pos_ >= lines_.size(); }
  std::size_t line_number() const { return pos_; }

  std::vector<std::string> next(const std::string& expected_tag) {
    if (done()) fail("unexpected end of file, expected '" + expected_tag + "'");
    auto tokens = text::split(lines_[pos_++], ' ');
    if (tokens.empty() || tokens[0] != expected_tag)
      fail("expected '" + expected_tag + "', got '" + lines_[pos_ - 1] + "'");
    return tokens;
  }

  std::string peek_tag() const {
    if (done()) return {};
    const auto sp = lines_[pos_].find(' ');
    return lines_[pos_].substr(0, sp);
  }

  // Rest of the line after the tag, verbatim.
  std::string rest(const std::string& expected_tag) {
    if (done()) fail("unexpected end of file, expected '" + expected_tag + "'");
    const std::string& line = lines_[pos_++];
    const std::string prefix = expected_tag + " ";
    if (line.rfind(prefix, 0) != 0) fail("expected '" + expected_tag + "', got '" + line + "'");
    return line.substr(prefix.size());
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw IoError("checkpoint line " + std::to_string(pos_) + ": " + what);
  }

  std::size_t count(const std::string& token) const {
    const auto v = text::parse_int(token);
    if (!v || *v < 0) fail("expected a count, got '" + token + "'");
    return static_cast<std::size_t>(*v);
  }

  std::vector<double> values(const std::string& tag, std::size_t n) {
    const auto tokens = next(tag);
    if (tokens.size() != n + 1)
      fail("'" + tag + "' row has " + std::to_string(tokens.size() - 1) + " values, expected " +
           std::to_string(n));
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      const auto v = text::parse_double(tokens[i]);
      if (!v) fail("bad number '" + tokens[i] + "'");
      out.push_back(*v);
    }
    return out;
  }

 private:
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

DenseLayer read_layer(LineReader& in, const char* part, std::size_t index) {
  const auto t = in.next("layer");
  if (t.size() != 6 || t[1] != part || in.count(t[2]) != index)
    in.fail(std::string("expected layer ") + part + " " + std::to_string(index));
  DenseLayer layer;
  layer.spec.in_dim = in.count(t[3]);
  layer.spec.out_dim = in.count(t[4]);
  try {
    layer.spec.activation = activation_from_string(t[5]);
  } catch (const std::exception& ex) {
    in.fail(ex.what());
  }
  layer.weights = DenseMatrix(layer.spec.in_dim, layer.spec.out_dim);
  for (std::size_t r = 0; r < layer.spec.in_dim; ++r) {
    const auto row = in.values("w", layer.spec.out_dim);
    std::copy(row.begin(), row.end(), layer.weights.row(r).begin());
  }
  layer.bias = in.values("b", layer.spec.out_dim);
  return layer;
}

}  // namespace

const std::string* Checkpoint::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return &v;
  return nullptr;
}

std::string checkpoint_to_text(const Checkpoint& ckpt) {
  const MlpModel& m = ckpt.model;
  m.validate();
  if (!m.all_finite()) throw NumericalError("checkpoint: model has non-finite parameters");
  std::string out = std::string(kCheckpointMagic) + "\n";
  out += "version " + std::to_string(kCheckpointVersion) + "\n";
  out += "seed " + std::to_string(m.seed) + "\n";
  out += "classes " + std::to_string(m.n_classes()) + "\n";
  for (std::size_t c = 0; c < ckpt.class_names.size(); ++c) {
    if (ckpt.class_names[c].find('\n') != std::string::npos)
      throw ValueError("checkpoint: class name contains a newline");
    out += "class " + std::to_string(c) + " " + ckpt.class_names[c] + "\n";
  }
  out += "topology " + std::to_string(m.input_dim());
  for (const auto& l : m.encoder) out += " " + std::to_string(l.spec.out_dim);
  out += "\nactivations";
  for (const auto& l : m.encoder) out += " " + to_string(l.spec.activation);
  out += "\n";
  for (const auto& [k, v] : ckpt.meta) {
    if (k.empty() || k.find(' ') != std::string::npos || v.find('\n') != std::string::npos)
      throw ValueError("checkpoint: bad metadata entry '" + k + "'");
    out += "meta " + k + " " + v + "\n";
  }
  if (ckpt.standardizer) {
    const Standardizer& s = *ckpt.standardizer;
    out += "standardizer " + std::to_string(s.mean.size()) + "\n";
    write_values(out, "mean", s.mean);
    write_values(out, "std", s.stddev);
    out += "constant";
    for (bool c : s.constant) out += c ? " 1" : " 0";
    out += "\n";
  }
  out += "encoder " + std::to_string(m.encoder.size()) + "\n";
  for (std::size_t i = 0; i < m.encoder.size(); ++i) write_layer(out, "encoder", i, m.encoder[i]);
  out += "decoder " + std::to_string(m.decoder.size()) + "\n";
  for (std::size_t i = 0; i < m.decoder.size(); ++i) write_layer(out, "decoder", i, m.decoder[i]);
  write_layer(out, "head", 0, m.head);
  out += "end\n";
  return out;
}

Checkpoint checkpoint_from_text(const std::string& contents) {
  LineReader in(contents);
  if (in.done() || in.peek_tag() != kCheckpointMagic) in.fail("missing MIREDCKPT header");
  in.next(kCheckpointMagic);
  const auto version = in.next("version");
  if (version.size() != 2 || version[1] != std::to_string(kCheckpointVersion))
    in.fail("unsupported checkpoint version");
  Checkpoint ckpt;
  const auto seed = in.next("seed");
  if (seed.size() != 2) in.fail("bad seed line");
  const auto seed_value = text::parse_int(seed[1]);
  if (!seed_value || *seed_value < 0) in.fail("bad seed '" + seed[1] + "'");
  ckpt.model.seed = static_cast<std::uint64_t>(*seed_value);
  const auto classes = in.next("classes");
  if (classes.size() != 2) in.fail("bad classes line");
  const std::size_t n_classes = in.count(classes[1]);
  while (in.peek_tag() == "class") {
    const std::string rest = in.rest("class");
    const auto sp = rest.find(' ');
    if (sp == std::string::npos || in.count(rest.substr(0, sp)) != ckpt.class_names.size())
      in.fail("class names out of order");
    ckpt.class_names.push_back(rest.substr(sp + 1));
  }
  if (!ckpt.class_names.empty() && ckpt.class_names.size() != n_classes)
    in.fail("class name count does not match classes");
  const auto topology = in.next("topology");
  const auto activations = in.next("activations");
  if (topology.size() < 3 || activations.size() != topology.size() - 1)
    in.fail("topology and activations do not agree");
  while (in.peek_tag() == "meta") {
    const std::string rest = in.rest("meta");
    const auto sp = rest.find(' ');
    if (sp == std::string::npos) in.fail("bad meta line");
    ckpt.meta.emplace_back(rest.substr(0, sp), rest.substr(sp + 1));
  }
  if (in.peek_tag() == "standardizer") {
    const auto t = in.next("standardizer");
    if (t.size() != 2) in.fail("bad standardizer line");
    const std::size_t d = in.count(t[1]);
    Standardizer s;
    s.mean = in.values("mean", d);
    s.stddev = in.values("std", d);
    const auto flags = in.next("constant");
    if (flags.size() != d + 1) in.fail("constant flag count mismatch");
    for (std::size_t i = 1; i < flags.size(); ++i) {
      if (flags[i] != "0" && flags[i] != "1") in.fail("bad constant flag '" + flags[i] + "'");
      s.constant.push_back(flags[i] == "1");
    }
    ckpt.standardizer = std::move(s);
  }
  const auto enc = in.next("encoder");
  if (enc.size() != 2) in.fail("bad encoder line");
  const std::size_t n_enc = in.count(enc[1]);
  for (std::size_t i = 0; i < n_enc; ++i) ckpt.model.encoder.push_back(read_layer(in, "encoder", i));
  const auto dec = in.next("decoder");
  if (dec.size() != 2) in.fail("bad decoder line");
  const std::size_t n_dec = in.count(dec[1]);
  for (std::size_t i = 0; i < n_dec; ++i) ckpt.model.decoder.push_back(read_layer(in, "decoder", i));
  ckpt.model.head = read_layer(in, "head", 0);
  in.next("end");
  if (!in.done()) in.fail("trailing content after 'end'");

  try {
    ckpt.model.validate();
  } catch (const std::exception& ex) {
    throw IoError(std::string("checkpoint: ") + ex.what());
  }
  if (ckpt.model.n_classes() != n_classes) throw IoError("checkpoint: head size != classes");
  if (n_enc != topology.size() - 2 || ckpt.model.input_dim() != in.count(topology[1]))
    throw IoError("checkpoint: layers do not match the topology line");
  for (std::size_t i = 0; i < n_enc; ++i) {
    if (ckpt.model.encoder[i].spec.out_dim != in.count(topology[i + 2]) ||
        to_string(ckpt.model.encoder[i].spec.activation) != activations[i + 1])
      throw IoError("checkpoint: encoder layer " + std::to_string(i) +
                    " does not match the header");
  }
  if (ckpt.standardizer && ckpt.standardizer->mean.size() != ckpt.model.input_dim())
    throw IoError("checkpoint: standardizer width does not match the model input");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  text::write_file(path, checkpoint_to_text(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_text(text::read_file(path));
}

}  // namespace mired
