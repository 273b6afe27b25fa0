#include "pinnode/kernel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pinnode {

namespace {

using Matrix = Eigen::MatrixXd;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;

// Columns [0, B) hold values, [B, 2B) first derivatives, [2B, 3B) second.
struct Layer {
  Matrix z;   // pre-activation, rows x 3B
  Matrix h;   // post-activation, rows x 3B (hidden layers only)
  Matrix j1;  // sigma'(z), rows x B
  Matrix j2;  // sigma''(z)
  Matrix j3;  // sigma'''(z)
};

struct Block {
  std::size_t begin = 0;
  Eigen::Index count = 0;
  Matrix features;  // N_0 x 3B
  std::vector<Layer> layers;
  Matrix out_adjoint;  // d_out x 3B
  Matrix carry;        // adjoint flowing into the layer below
  std::vector<double> grad;
};

template <Primitive P>
void activate(Layer& L, Eigen::Index B) {
  const Eigen::Index rows = L.z.rows();
  for (Eigen::Index c = 0; c < B; ++c) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Jet3 j = primitive_jet(P, L.z(i, c));
      const double z1 = L.z(i, B + c);
      const double z2 = L.z(i, 2 * B + c);
      L.h(i, c) = j.f;
      L.h(i, B + c) = j.f1 * z1;
      L.h(i, 2 * B + c) = j.f2 * z1 * z1 + j.f1 * z2;
      L.j1(i, c) = j.f1;
      L.j2(i, c) = j.f2;
      L.j3(i, c) = j.f3;
    }
  }
}

void activate(Primitive p, Layer& L, Eigen::Index B) {
  switch (p) {
    case Primitive::tanh: activate<Primitive::tanh>(L, B); break;
    case Primitive::sin: activate<Primitive::sin>(L, B); break;
    case Primitive::sigmoid: activate<Primitive::sigmoid>(L, B); break;
    case Primitive::relu: activate<Primitive::relu>(L, B); break;
    case Primitive::swish: activate<Primitive::swish>(L, B); break;
    case Primitive::cos: activate<Primitive::cos>(L, B); break;
    case Primitive::exp: activate<Primitive::exp>(L, B); break;
    case Primitive::softplus: activate<Primitive::softplus>(L, B); break;
    case Primitive::identity: activate<Primitive::identity>(L, B); break;
  }
}

// Adjoint of the hidden activation, in place: `carry` enters as the adjoint
// of h (rows x 3B) and leaves as the adjoint of z.
//   zbar2 = hbar2 s1
//   zbar1 = hbar1 s1 + 2 hbar2 s2 z1
//   zbar0 = hbar0 s1 + hbar1 s2 z1 + hbar2 (s3 z1^2 + s2 z2)
void activation_adjoint(const Layer& L, Matrix& carry, Eigen::Index B) {
  const Eigen::Index rows = L.z.rows();
  for (Eigen::Index c = 0; c < B; ++c) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double s1 = L.j1(i, c), s2 = L.j2(i, c), s3 = L.j3(i, c);
      const double z1 = L.z(i, B + c), z2 = L.z(i, 2 * B + c);
      const double a0 = carry(i, c), a1 = carry(i, B + c), a2 = carry(i, 2 * B + c);
      carry(i, c) = a0 * s1 + a1 * s2 * z1 + a2 * (s3 * z1 * z1 + s2 * z2);
      carry(i, B + c) = a1 * s1 + 2.0 * a2 * s2 * z1;
      carry(i, 2 * B + c) = a2 * s1;
    }
  }
}

}  // namespace

struct BatchedKernel::Impl {
  NetworkSpec spec;
  std::vector<double> times;
  std::vector<LayerLayout> layout;
  std::vector<Block> blocks;
  int threads = 1;

  void run_forward(Block& blk, std::span<const double> theta) const {
    const Eigen::Index B = blk.count;
    const Matrix* in = &blk.features;
    for (std::size_t l = 0; l < layout.size(); ++l) {
      const LayerLayout& LL = layout[l];
      ConstMatrixMap W(theta.data() + LL.weight_offset, LL.rows, LL.cols);
      ConstVectorMap b(theta.data() + LL.bias_offset, LL.rows);
      Layer& L = blk.layers[l];
      L.z.noalias() = W * (*in);
      L.z.leftCols(B).colwise() += b;
      if (l + 1 < layout.size()) {
        activate(spec.activation, L, B);
        in = &L.h;
      }
    }
  }

  void run_backward(Block& blk, std::span<const double> theta) {
    const Eigen::Index B = blk.count;
    std::fill(blk.grad.begin(), blk.grad.end(), 0.0);
    blk.carry = blk.out_adjoint;
    for (std::size_t l = layout.size(); l-- > 0;) {
      const LayerLayout& LL = layout[l];
      const Matrix& in = l == 0 ? blk.features : blk.layers[l - 1].h;
      MatrixMap gW(blk.grad.data() + LL.weight_offset, LL.rows, LL.cols);
      VectorMap gb(blk.grad.data() + LL.bias_offset, LL.rows);
      gW.noalias() += blk.carry * in.transpose();
      gb += blk.carry.leftCols(B).rowwise().sum();
      if (l == 0) break;
      ConstMatrixMap W(theta.data() + LL.weight_offset, LL.rows, LL.cols);
      Matrix below = W.transpose() * blk.carry;
      activation_adjoint(blk.layers[l - 1], below, B);
      blk.carry = std::move(below);
    }
  }
};

BatchedKernel::BatchedKernel(NetworkSpec spec, std::vector<double> times, KernelOptions options)
    : impl_(std::make_unique<Impl>()) {
  spec.validate();
  impl_->spec = std::move(spec);
  impl_->times = std::move(times);
  impl_->layout = layer_layout(impl_->spec);
#ifdef _OPENMP
  impl_->threads = options.threads > 0 ? options.threads : omp_get_max_threads();
#else
  impl_->threads = 1;
#endif
  const std::size_t chunk = std::max<std::size_t>(1, options.chunk_size);
  const auto n0 = static_cast<Eigen::Index>(impl_->spec.input_width());
  const std::size_t P = impl_->spec.parameter_count();
  for (std::size_t begin = 0; begin < impl_->times.size(); begin += chunk) {
    Block blk;
    blk.begin = begin;
    blk.count = static_cast<Eigen::Index>(std::min(chunk, impl_->times.size() - begin));
    const Eigen::Index B = blk.count;
    blk.features.resize(n0, 3 * B);
    for (Eigen::Index c = 0; c < B; ++c) {
      const auto f = input_features<double>(impl_->spec, seed_input(impl_->times[begin + static_cast<std::size_t>(c)]));
      for (Eigen::Index i = 0; i < n0; ++i) {
        blk.features(i, c) = f[static_cast<std::size_t>(i)].value;
        blk.features(i, B + c) = f[static_cast<std::size_t>(i)].d1;
        blk.features(i, 2 * B + c) = f[static_cast<std::size_t>(i)].d2;
      }
    }
    for (const LayerLayout& LL : impl_->layout) {
      Layer L;
      L.z.resize(LL.rows, 3 * B);
      L.h.resize(LL.rows, 3 * B);
      L.j1.resize(LL.rows, B);
      L.j2.resize(LL.rows, B);
      L.j3.resize(LL.rows, B);
      blk.layers.push_back(std::move(L));
    }
    blk.out_adjoint.resize(impl_->spec.d_out, 3 * B);
    blk.grad.assign(P, 0.0);
    impl_->blocks.push_back(std::move(blk));
  }
}

BatchedKernel::~BatchedKernel() = default;
BatchedKernel::BatchedKernel(BatchedKernel&&) noexcept = default;
BatchedKernel& BatchedKernel::operator=(BatchedKernel&&) noexcept = default;

const NetworkSpec& BatchedKernel::spec() const { return impl_->spec; }
std::span<const double> BatchedKernel::times() const { return impl_->times; }
std::size_t BatchedKernel::size() const { return impl_->times.size(); }
int BatchedKernel::thread_count() const { return impl_->threads; }

void BatchedKernel::forward(std::span<const double> theta, std::span<Taylor2<double>> out) {
  Impl& m = *impl_;
  if (theta.size() != m.spec.parameter_count()) throw ContractViolation("kernel: theta length mismatch");
  const auto d_out = static_cast<std::size_t>(m.spec.d_out);
  if (out.size() != m.times.size() * d_out) throw ContractViolation("kernel: output span has the wrong size");
  const auto nblocks = static_cast<std::ptrdiff_t>(m.blocks.size());
#pragma omp parallel for schedule(static) num_threads(m.threads) if (m.threads > 1)
  for (std::ptrdiff_t k = 0; k < nblocks; ++k) {
    Block& blk = m.blocks[static_cast<std::size_t>(k)];
    m.run_forward(blk, theta);
    const Matrix& o = blk.layers.back().z;
    const Eigen::Index B = blk.count;
    for (Eigen::Index c = 0; c < B; ++c)
      for (std::size_t j = 0; j < d_out; ++j) {
        const auto r = static_cast<Eigen::Index>(j);
        out[(blk.begin + static_cast<std::size_t>(c)) * d_out + j] = {o(r, c), o(r, B + c), o(r, 2 * B + c)};
      }
  }
}

void BatchedKernel::evaluate(std::span<const double> theta, const PointHead& head, std::size_t n_contrib,
                             std::span<double> contrib, std::span<double> grad) {
  Impl& m = *impl_;
  const std::size_t P = m.spec.parameter_count();
  if (theta.size() != P || grad.size() != P) throw ContractViolation("kernel: theta/grad length mismatch");
  if (contrib.size() != m.times.size() * n_contrib) throw ContractViolation("kernel: contribution span has the wrong size");
  const auto d_out = static_cast<std::size_t>(m.spec.d_out);
  const auto nblocks = static_cast<std::ptrdiff_t>(m.blocks.size());
  std::exception_ptr failure;

#pragma omp parallel num_threads(m.threads) if (m.threads > 1)
  {
#ifdef _OPENMP
    const int tid = omp_get_thread_num();
#else
    const int tid = 0;
#endif
    std::vector<Taylor2<double>> n(d_out), adj(d_out);
#pragma omp for schedule(static)
    for (std::ptrdiff_t k = 0; k < nblocks; ++k) {
      try {
        Block& blk = m.blocks[static_cast<std::size_t>(k)];
        m.run_forward(blk, theta);
        const Matrix& o = blk.layers.back().z;
        const Eigen::Index B = blk.count;
        for (Eigen::Index c = 0; c < B; ++c) {
          const std::size_t p = blk.begin + static_cast<std::size_t>(c);
          for (std::size_t j = 0; j < d_out; ++j) {
            const auto r = static_cast<Eigen::Index>(j);
            n[j] = {o(r, c), o(r, B + c), o(r, 2 * B + c)};
            adj[j] = {0.0, 0.0, 0.0};
          }
          head(tid, p, n, adj, contrib.subspan(p * n_contrib, n_contrib));
          for (std::size_t j = 0; j < d_out; ++j) {
            const auto r = static_cast<Eigen::Index>(j);
            blk.out_adjoint(r, c) = adj[j].value;
            blk.out_adjoint(r, B + c) = adj[j].d1;
            blk.out_adjoint(r, 2 * B + c) = adj[j].d2;
          }
        }
        m.run_backward(blk, theta);
      } catch (...) {
#pragma omp critical(pinnode_kernel_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::fill(grad.begin(), grad.end(), 0.0);
  for (const Block& blk : m.blocks)
    for (std::size_t k = 0; k < P; ++k) grad[k] += blk.grad[k];
}

}  // namespace pinnode
