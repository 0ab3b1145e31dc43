#include "dmca/params.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dmca/error.hpp"

namespace dmca {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

Tensor& ParamStore::add(const std::string& name, Tensor tensor) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  if (!tensor.is_leaf()) throw Error("parameter '" + name + "' must be a leaf tensor");
  const auto v = tensor.values();
  names_.push_back(name);
  tensors_.emplace_back(tensor.shape(), std::vector<double>(v.begin(), v.end()), true);
  return tensors_.back();
}

Tensor& ParamStore::add_uniform(const std::string& name, Shape shape, std::size_t fan_in, CounterRng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::vector<double> values(shape_size(shape));
  for (double& v : values) v = rng.uniform(-bound, bound);
  return add(name, Tensor(std::move(shape), std::move(values)));
}

Tensor& ParamStore::add_constant(const std::string& name, Shape shape, double value) {
  return add(name, Tensor::full(std::move(shape), value));
}

bool ParamStore::contains(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

Tensor& ParamStore::get(const std::string& name) {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return tensors_[static_cast<std::size_t>(it - names_.begin())];
}

const Tensor& ParamStore::get(const std::string& name) const { return const_cast<ParamStore*>(this)->get(name); }

std::size_t ParamStore::parameter_count() const { return parameter_count(""); }

std::size_t ParamStore::parameter_count(const std::string& prefix) const {
  std::size_t total = 0;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].starts_with(prefix)) total += tensors_[i].size();
  }
  return total;
}

void ParamStore::zero_grad() {
  for (Tensor& t : tensors_) t.zero_grad();
}

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedArray>& arrays) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open checkpoint for writing: " + path.string());
  out << "DMCA-CHECKPOINT 1\n";
  out << "dtype float64\n";
  out << "count " << arrays.size() << "\n";
  for (const NamedArray& a : arrays) {
    if (a.name.empty() || a.name.find_first_of(" \t\n") != std::string::npos) {
      throw Error("checkpoint array names may not contain whitespace: '" + a.name + "'");
    }
    if (shape_size(a.shape) != a.values.size()) throw ShapeError("checkpoint array '" + a.name + "' shape mismatch");
    out << "param " << a.name << " " << a.shape.size();
    for (std::size_t d : a.shape) out << " " << d;
    out << "\n";
  }
  out << "end\n";
  for (const NamedArray& a : arrays) {
    out.write(reinterpret_cast<const char*>(a.values.data()),
              static_cast<std::streamsize>(a.values.size() * sizeof(double)));
  }
  if (!out) throw Error("failed writing checkpoint: " + path.string());
}

std::vector<NamedArray> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  std::string line;
  auto expect_line = [&](const std::string& what) {
    if (!std::getline(in, line)) throw DataError("truncated checkpoint header (expected " + what + ")");
  };
  expect_line("magic");
  if (line != "DMCA-CHECKPOINT 1") throw DataError("not a version-1 DMCA checkpoint: " + path.string());
  expect_line("dtype");
  if (line != "dtype float64") throw DataError("unsupported checkpoint dtype: " + line);
  expect_line("count");
  std::size_t count = 0;
  {
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key >> count) || key != "count") throw DataError("malformed checkpoint count line");
  }
  std::vector<NamedArray> arrays;
  arrays.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    expect_line("param");
    std::istringstream ss(line);
    std::string key;
    NamedArray a;
    std::size_t rank = 0;
    if (!(ss >> key >> a.name >> rank) || key != "param") throw DataError("malformed checkpoint param line: " + line);
    a.shape.resize(rank);
    for (std::size_t d = 0; d < rank; ++d) {
      if (!(ss >> a.shape[d])) throw DataError("malformed checkpoint shape: " + line);
    }
    arrays.push_back(std::move(a));
  }
  expect_line("end");
  if (line != "end") throw DataError("checkpoint header missing 'end'");
  for (NamedArray& a : arrays) {
    a.values.resize(shape_size(a.shape));
    in.read(reinterpret_cast<char*>(a.values.data()), static_cast<std::streamsize>(a.values.size() * sizeof(double)));
    if (!in) throw DataError("truncated checkpoint payload for '" + a.name + "'");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes after checkpoint payload");
  return arrays;
}

std::vector<NamedArray> snapshot(const ParamStore& params) {
  std::vector<NamedArray> arrays;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& t = params.tensors()[i];
    arrays.push_back({params.names()[i], t.shape(), std::vector<double>(t.values().begin(), t.values().end())});
  }
  return arrays;
}

void restore(ParamStore& params, const std::vector<NamedArray>& arrays) {
  for (const NamedArray& a : arrays) {
    if (!params.contains(a.name)) continue;
    Tensor& t = params.get(a.name);
    if (t.shape() != a.shape) {
      throw ShapeError("checkpoint shape " + shape_string(a.shape) + " for '" + a.name + "' differs from model " +
                       shape_string(t.shape()));
    }
    std::copy(a.values.begin(), a.values.end(), t.mutable_values().begin());
  }
  for (const std::string& name : params.names()) {
    const bool found = std::any_of(arrays.begin(), arrays.end(), [&](const NamedArray& a) { return a.name == name; });
    if (!found) throw DataError("checkpoint lacks parameter '" + name + "'");
  }
}

}  // namespace dmca
