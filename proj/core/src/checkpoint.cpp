#include "capse/checkpoint.hpp"

#include <fstream>
#include <iomanip>

#include "capse/error.hpp"

namespace capse {

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt,
                     const Vocab& vocab) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write checkpoint: " + path.string());
  out << std::setprecision(17);

  const CapsEParams& p = ckpt.params;
  out << "capse " << p.k << ' ' << p.n_filters << ' ' << p.d << ' '
      << p.routing_iterations << ' ' << ckpt.step << '\n';
  write_embeddings(out, ckpt.embeddings, vocab);

  out << "filters " << p.n_filters << " 3\n";
  for (std::size_t f = 0; f < p.n_filters; ++f) {
    out << p.filter(f, 0) << ' ' << p.filter(f, 1) << ' ' << p.filter(f, 2)
        << '\n';
  }
  out << "biases " << p.n_filters << '\n';
  for (std::size_t f = 0; f < p.n_filters; ++f) {
    out << p.biases[f] << (f + 1 == p.n_filters ? '\n' : ' ');
  }
  for (std::size_t i = 0; i < p.k; ++i) {
    out << "W_" << i << ' ' << p.d << ' ' << p.n_filters << '\n';
    for (std::size_t a = 0; a < p.d; ++a) {
      for (std::size_t b = 0; b < p.n_filters; ++b) {
        out << p.weight(i, a, b) << (b + 1 == p.n_filters ? '\n' : ' ');
      }
    }
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const Vocab& vocab) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open checkpoint: " + path.string());

  std::string tag;
  std::size_t k = 0, n = 0, d = 0;
  int m = 0;
  std::int64_t step = 0;
  if (!(in >> tag >> k >> n >> d >> m >> step) || tag != "capse") {
    throw ParseError("checkpoint: expected 'capse <k> <N> <d> <m> <step>'");
  }
  if (k < 1 || n < 1 || d < 1 || m < 1) {
    throw ShapeError("checkpoint: k, N, d, m must all be >= 1");
  }

  Checkpoint ckpt;
  ckpt.step = step;
  ckpt.embeddings = read_embeddings(in, vocab);
  if (ckpt.embeddings.dim() != k) {
    throw ShapeError("checkpoint: embedding dimension does not match header");
  }

  CapsEParams& p = ckpt.params;
  p.k = k;
  p.n_filters = n;
  p.d = d;
  p.routing_iterations = m;
  p.filters.resize(n * 3);
  p.biases.resize(n);
  p.capsule_weights.resize(k * d * n);

  std::size_t rows = 0, cols = 0;
  if (!(in >> tag >> rows >> cols) || tag != "filters" || rows != n ||
      cols != 3) {
    throw ParseError("checkpoint: bad filters section");
  }
  for (double& x : p.filters) {
    if (!(in >> x)) throw ParseError("checkpoint: truncated filters");
  }
  if (!(in >> tag >> rows) || tag != "biases" || rows != n) {
    throw ParseError("checkpoint: bad biases section");
  }
  for (double& x : p.biases) {
    if (!(in >> x)) throw ParseError("checkpoint: truncated biases");
  }
  for (std::size_t i = 0; i < k; ++i) {
    const std::string expect = "W_" + std::to_string(i);
    if (!(in >> tag >> rows >> cols) || tag != expect || rows != d ||
        cols != n) {
      throw ParseError("checkpoint: bad " + expect + " section");
    }
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (!(in >> p.capsule_weights[(i * d + a) * n + b])) {
          throw ParseError("checkpoint: truncated " + expect);
        }
      }
    }
  }
  return ckpt;
}

}  // namespace capse
