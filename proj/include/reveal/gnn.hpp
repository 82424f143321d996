#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "features.hpp"
#include "mulgen.hpp"
#include "rng.hpp"

namespace reveal
{

/*! \brief Dense row-major matrix of doubles. */
struct matrix
{
  uint32_t rows{ 0 };
  uint32_t cols{ 0 };
  std::vector<double> data;

  matrix() = default;
  matrix( uint32_t r, uint32_t c ) : rows( r ), cols( c ), data( static_cast<size_t>( r ) * c, 0.0 ) {}

  double* row( uint32_t r ) { return data.data() + static_cast<size_t>( r ) * cols; }
  double const* row( uint32_t r ) const { return data.data() + static_cast<size_t>( r ) * cols; }
  double& at( uint32_t r, uint32_t c ) { return data[static_cast<size_t>( r ) * cols + c]; }
  double at( uint32_t r, uint32_t c ) const { return data[static_cast<size_t>( r ) * cols + c]; }

  void fill( double v ) { std::fill( data.begin(), data.end(), v ); }
};

enum class model_task : uint8_t
{
  ppa,
  fsa
};

/*! \brief Position of an adder class in the global nine-way ranking:
 * the four chained kinds come first, the five tree kinds follow.
 */
inline int fsa_class_index( fsa_kind k )
{
  auto const& nt = non_tree_adders();
  for ( size_t i = 0; i < nt.size(); ++i )
  {
    if ( nt[i] == k )
    {
      return static_cast<int>( i );
    }
  }
  auto const& tr = tree_adders();
  for ( size_t i = 0; i < tr.size(); ++i )
  {
    if ( tr[i] == k )
    {
      return static_cast<int>( nt.size() + i );
    }
  }
  return -1;
}

inline fsa_kind fsa_class_kind( int index )
{
  return index < 4 ? non_tree_adders()[index] : tree_adders()[index - 4];
}

inline int ppa_class_index( ppa_kind k ) { return static_cast<int>( k ); }

inline ppa_kind ppa_class_kind( int index ) { return static_cast<ppa_kind>( index ); }

/*! \brief Learned parameters: three directional message-passing layers, batch
 * normalization over the concatenated embedding, the topology head and the
 * two subtype heads (or the flat accumulator head), the scalar normalization
 * statistics, and the task-balancing coefficient.
 */
struct model_weights
{
  static constexpr uint32_t version = 1;
  static constexpr uint32_t num_layers = 3;
  static constexpr double bn_eps = 1e-5;

  model_task task{ model_task::fsa };
  uint32_t hidden{ 64 };

  std::array<matrix, num_layers> w_pre;
  std::array<matrix, num_layers> w_suc;

  std::vector<double> bn_scale, bn_shift, bn_mean, bn_var;

  matrix w_topo; // 2 x (2H + 1)
  matrix w_nt;   // 4 x (2H + 4)
  matrix w_tree; // 5 x (2H + 4)
  matrix w_ppa;  // 5 x (2H + 3)

  // normalization for [f_level, f_fan, density, clustering, avg_degree]
  std::array<double, 5> scalar_mean{ 0, 0, 0, 0, 0 };
  std::array<double, 5> scalar_std{ 1, 1, 1, 1, 1 };

  double alpha{ 1.0 };

  uint32_t embed_dim() const { return 2 * hidden; }

  uint32_t layer_input_dim( uint32_t layer ) const
  {
    return layer == 0 ? node_feature_dim : embed_dim();
  }
};

inline model_weights init_model( model_task task, uint64_t seed, uint32_t hidden = 64 )
{
  model_weights m;
  m.task = task;
  m.hidden = hidden;
  rng gen( seed );
  auto glorot = [&]( matrix& w, uint32_t rows, uint32_t cols ) {
    w = matrix( rows, cols );
    double const limit = std::sqrt( 6.0 / ( rows + cols ) );
    for ( auto& v : w.data )
    {
      v = gen.next_symmetric( limit );
    }
  };
  for ( uint32_t k = 0; k < model_weights::num_layers; ++k )
  {
    glorot( m.w_pre[k], hidden, m.layer_input_dim( k ) );
    glorot( m.w_suc[k], hidden, m.layer_input_dim( k ) );
  }
  uint32_t const e = m.embed_dim();
  m.bn_scale.assign( e, 1.0 );
  m.bn_shift.assign( e, 0.0 );
  m.bn_mean.assign( e, 0.0 );
  m.bn_var.assign( e, 1.0 );
  glorot( m.w_topo, 2, e + 1 );
  glorot( m.w_nt, 4, e + 4 );
  glorot( m.w_tree, 5, e + 4 );
  glorot( m.w_ppa, 5, e + 3 );
  return m;
}

/*! \brief Gradient accumulator shaped like the trainable parameters. */
struct model_grads
{
  std::array<matrix, model_weights::num_layers> w_pre;
  std::array<matrix, model_weights::num_layers> w_suc;
  std::vector<double> bn_scale, bn_shift;
  matrix w_topo, w_nt, w_tree, w_ppa;

  explicit model_grads( model_weights const& m )
  {
    for ( uint32_t k = 0; k < model_weights::num_layers; ++k )
    {
      w_pre[k] = matrix( m.w_pre[k].rows, m.w_pre[k].cols );
      w_suc[k] = matrix( m.w_suc[k].rows, m.w_suc[k].cols );
    }
    bn_scale.assign( m.bn_scale.size(), 0.0 );
    bn_shift.assign( m.bn_shift.size(), 0.0 );
    w_topo = matrix( m.w_topo.rows, m.w_topo.cols );
    w_nt = matrix( m.w_nt.rows, m.w_nt.cols );
    w_tree = matrix( m.w_tree.rows, m.w_tree.cols );
    w_ppa = matrix( m.w_ppa.rows, m.w_ppa.cols );
  }

  void add( model_grads const& o )
  {
    auto axpy = []( auto& a, auto const& b ) {
      for ( size_t i = 0; i < a.size(); ++i )
      {
        a[i] += b[i];
      }
    };
    for ( uint32_t k = 0; k < model_weights::num_layers; ++k )
    {
      axpy( w_pre[k].data, o.w_pre[k].data );
      axpy( w_suc[k].data, o.w_suc[k].data );
    }
    axpy( bn_scale, o.bn_scale );
    axpy( bn_shift, o.bn_shift );
    axpy( w_topo.data, o.w_topo.data );
    axpy( w_nt.data, o.w_nt.data );
    axpy( w_tree.data, o.w_tree.data );
    axpy( w_ppa.data, o.w_ppa.data );
  }

  double squared_norm() const
  {
    double s = 0.0;
    auto acc = [&]( auto const& v ) {
      for ( double x : v )
      {
        s += x * x;
      }
    };
    for ( uint32_t k = 0; k < model_weights::num_layers; ++k )
    {
      acc( w_pre[k].data );
      acc( w_suc[k].data );
    }
    acc( bn_scale );
    acc( bn_shift );
    acc( w_topo.data );
    acc( w_nt.data );
    acc( w_tree.data );
    acc( w_ppa.data );
    return s;
  }
};

namespace detail
{

struct graph_adjacency
{
  std::vector<std::vector<uint32_t>> in_of;  // fanins per node
  std::vector<std::vector<uint32_t>> out_of; // fanouts per node

  graph_adjacency( uint32_t n, std::vector<std::pair<uint32_t, uint32_t>> const& edges )
      : in_of( n ), out_of( n )
  {
    for ( auto const& [u, v] : edges )
    {
      in_of[v].push_back( u );
      out_of[u].push_back( v );
    }
  }
};

/*! \brief mean of selected rows of `x` into row r of `out` (zero when empty). */
inline void mean_rows( matrix const& x, std::vector<uint32_t> const& idx, matrix& out, uint32_t r )
{
  double* dst = out.row( r );
  std::fill( dst, dst + out.cols, 0.0 );
  if ( idx.empty() )
  {
    return;
  }
  for ( uint32_t i : idx )
  {
    double const* src = x.row( i );
    for ( uint32_t c = 0; c < out.cols; ++c )
    {
      dst[c] += src[c];
    }
  }
  double const inv = 1.0 / idx.size();
  for ( uint32_t c = 0; c < out.cols; ++c )
  {
    dst[c] *= inv;
  }
}

/*! \brief z = x * w^T followed by relu; keeps z for the backward pass. */
inline void linear_relu( matrix const& x, matrix const& w, matrix& z, matrix& h )
{
  z = matrix( x.rows, w.rows );
  h = matrix( x.rows, w.rows );
  for ( uint32_t i = 0; i < x.rows; ++i )
  {
    double const* xi = x.row( i );
    for ( uint32_t r = 0; r < w.rows; ++r )
    {
      double const* wr = w.row( r );
      double s = 0.0;
      for ( uint32_t c = 0; c < x.cols; ++c )
      {
        s += xi[c] * wr[c];
      }
      z.at( i, r ) = s;
      h.at( i, r ) = s > 0.0 ? s : 0.0;
    }
  }
}

struct layer_cache
{
  matrix agg_pre, agg_suc;
  matrix z_pre, z_suc;
  matrix h_pre, h_suc;
};

struct sample_cache
{
  graph_adjacency adj;
  std::array<layer_cache, model_weights::num_layers> layers;
  std::array<matrix, model_weights::num_layers + 1> x; // layer inputs
  matrix bn_out;
  std::vector<double> h_g;
  std::array<double, 5> scalars; // normalized
  std::vector<double> head_in;
  std::vector<double> logits_topo, logits_sub, probs_topo, probs_sub;

  explicit sample_cache( gnn_sample const& s ) : adj( s.num_nodes, s.edges ) {}
};

/*! \brief Message-passing layers up to the pre-normalization embedding. */
inline matrix forward_layers( model_weights const& m, gnn_sample const& s, sample_cache& cache )
{
  cache.x[0] = matrix( s.num_nodes, node_feature_dim );
  std::copy( s.features.begin(), s.features.end(), cache.x[0].data.begin() );
  for ( uint32_t k = 0; k < model_weights::num_layers; ++k )
  {
    auto& lc = cache.layers[k];
    matrix const& xin = cache.x[k];
    lc.agg_pre = matrix( s.num_nodes, xin.cols );
    lc.agg_suc = matrix( s.num_nodes, xin.cols );
    for ( uint32_t v = 0; v < s.num_nodes; ++v )
    {
      mean_rows( xin, cache.adj.in_of[v], lc.agg_pre, v );
      mean_rows( xin, cache.adj.out_of[v], lc.agg_suc, v );
    }
    linear_relu( lc.agg_pre, m.w_pre[k], lc.z_pre, lc.h_pre );
    linear_relu( lc.agg_suc, m.w_suc[k], lc.z_suc, lc.h_suc );
    matrix next( s.num_nodes, 2 * m.hidden );
    for ( uint32_t v = 0; v < s.num_nodes; ++v )
    {
      std::copy( lc.h_pre.row( v ), lc.h_pre.row( v ) + m.hidden, next.row( v ) );
      std::copy( lc.h_suc.row( v ), lc.h_suc.row( v ) + m.hidden, next.row( v ) + m.hidden );
    }
    cache.x[k + 1] = std::move( next );
  }
  return cache.x[model_weights::num_layers];
}

inline void softmax( std::vector<double> const& logits, std::vector<double>& probs )
{
  double const mx = *std::max_element( logits.begin(), logits.end() );
  probs.resize( logits.size() );
  double sum = 0.0;
  for ( size_t i = 0; i < logits.size(); ++i )
  {
    probs[i] = std::exp( logits[i] - mx );
    sum += probs[i];
  }
  for ( auto& p : probs )
  {
    p /= sum;
  }
}

inline std::vector<double> mat_vec( matrix const& w, std::vector<double> const& x )
{
  std::vector<double> y( w.rows, 0.0 );
  for ( uint32_t r = 0; r < w.rows; ++r )
  {
    double const* wr = w.row( r );
    double s = 0.0;
    for ( uint32_t c = 0; c < w.cols; ++c )
    {
      s += wr[c] * x[c];
    }
    y[r] = s;
  }
  return y;
}

inline std::array<double, 5> normalize_scalars( model_weights const& m, graph_features const& g )
{
  std::array<double, 5> const raw{ g.f_level, g.f_fan, g.density, g.clustering, g.avg_degree };
  std::array<double, 5> out{};
  for ( size_t i = 0; i < 5; ++i )
  {
    out[i] = ( raw[i] - m.scalar_mean[i] ) / std::max( m.scalar_std[i], 1e-9 );
  }
  return out;
}

} // namespace detail

/*! \brief Graph embedding by directional message passing, batch
 * normalization and global mean pooling.  Inference mode: the normalization
 * uses the stored running statistics, so results are per-graph and
 * permutation invariant.
 */
inline std::pair<std::vector<double>, matrix> forward( model_weights const& m, gnn_sample const& s )
{
  detail::sample_cache cache( s );
  matrix const emb = detail::forward_layers( m, s, cache );
  matrix out( emb.rows, emb.cols );
  for ( uint32_t r = 0; r < emb.rows; ++r )
  {
    for ( uint32_t c = 0; c < emb.cols; ++c )
    {
      double const xhat =
          ( emb.at( r, c ) - m.bn_mean[c] ) / std::sqrt( m.bn_var[c] + model_weights::bn_eps );
      out.at( r, c ) = m.bn_scale[c] * xhat + m.bn_shift[c];
    }
  }
  std::vector<double> h_g( emb.cols, 0.0 );
  for ( uint32_t r = 0; r < out.rows; ++r )
  {
    for ( uint32_t c = 0; c < out.cols; ++c )
    {
      h_g[c] += out.at( r, c );
    }
  }
  for ( auto& v : h_g )
  {
    v /= out.rows;
  }
  return { h_g, out };
}

/*! \brief Scores for one cone: topology probabilities plus the class ranking.
 *
 * For the adder model the nine joint scores are P(topology) * P(class |
 * topology), so the ranking can mix categories; scalars are normalized with
 * the statistics stored in the model.
 */
struct prediction
{
  std::array<double, 2> topo_probs{ 0.5, 0.5 };
  std::vector<std::pair<int, double>> ranking; // class index -> joint score, sorted
};

inline prediction classify( model_weights const& m, std::vector<double> const& h_g,
                            graph_features const& g )
{
  auto const scalars = detail::normalize_scalars( m, g );
  prediction pred;
  if ( m.task == model_task::ppa )
  {
    std::vector<double> input( h_g );
    input.push_back( scalars[2] );
    input.push_back( scalars[3] );
    input.push_back( scalars[4] );
    std::vector<double> probs;
    detail::softmax( detail::mat_vec( m.w_ppa, input ), probs );
    for ( int c = 0; c < 5; ++c )
    {
      pred.ranking.push_back( { c, probs[c] } );
    }
  }
  else
  {
    std::vector<double> topo_in( h_g );
    topo_in.push_back( scalars[0] );
    std::vector<double> topo_probs;
    detail::softmax( detail::mat_vec( m.w_topo, topo_in ), topo_probs );
    pred.topo_probs = { topo_probs[0], topo_probs[1] };

    std::vector<double> sub_in( h_g );
    sub_in.push_back( scalars[1] );
    sub_in.push_back( scalars[2] );
    sub_in.push_back( scalars[3] );
    sub_in.push_back( scalars[4] );
    std::vector<double> nt_probs, tree_probs;
    detail::softmax( detail::mat_vec( m.w_nt, sub_in ), nt_probs );
    detail::softmax( detail::mat_vec( m.w_tree, sub_in ), tree_probs );
    for ( int c = 0; c < 4; ++c )
    {
      pred.ranking.push_back( { c, topo_probs[0] * nt_probs[c] } );
    }
    for ( int c = 0; c < 5; ++c )
    {
      pred.ranking.push_back( { 4 + c, topo_probs[1] * tree_probs[c] } );
    }
  }
  std::stable_sort( pred.ranking.begin(), pred.ranking.end(),
                    []( auto const& a, auto const& b ) { return a.second > b.second; } );
  return pred;
}

inline prediction classify_sample( model_weights const& m, gnn_sample const& s )
{
  auto const [h_g, rows] = forward( m, s );
  (void)rows;
  return classify( m, h_g, s.graph );
}

/*! \brief Loss evaluation control: which loss streams contribute. */
struct loss_options
{
  double alpha{ 1.0 };
  bool include_topo{ true };
  bool include_subtype{ true };
  bool route_by_prediction{ true }; // false = route by the ground-truth topology
  bool routed{ true };              // false = unrouted sum over both heads (calibration)
};

struct loss_result
{
  double loss{ 0.0 };
  uint32_t mismatched_routing{ 0 }; // samples whose label falls outside the routed head
  model_grads grads;
  std::vector<double> bn_batch_mean, bn_batch_var; // statistics of this batch's forward pass

  explicit loss_result( model_weights const& m ) : grads( m ) {}
};

namespace detail
{

struct bn_batch_cache
{
  std::vector<double> mean, var, inv_std;
};

/*! \brief Forward through BN in training mode over a whole batch. */
inline bn_batch_cache bn_forward_train( model_weights const& m,
                                        std::vector<matrix> const& embeddings,
                                        std::vector<matrix>& outputs,
                                        std::vector<matrix>& xhats )
{
  uint32_t const e = m.embed_dim();
  bn_batch_cache cache;
  cache.mean.assign( e, 0.0 );
  cache.var.assign( e, 0.0 );
  cache.inv_std.assign( e, 0.0 );
  size_t total = 0;
  for ( auto const& emb : embeddings )
  {
    total += emb.rows;
    for ( uint32_t r = 0; r < emb.rows; ++r )
    {
      for ( uint32_t c = 0; c < e; ++c )
      {
        cache.mean[c] += emb.at( r, c );
      }
    }
  }
  for ( uint32_t c = 0; c < e; ++c )
  {
    cache.mean[c] /= static_cast<double>( total );
  }
  for ( auto const& emb : embeddings )
  {
    for ( uint32_t r = 0; r < emb.rows; ++r )
    {
      for ( uint32_t c = 0; c < e; ++c )
      {
        double const d = emb.at( r, c ) - cache.mean[c];
        cache.var[c] += d * d;
      }
    }
  }
  for ( uint32_t c = 0; c < e; ++c )
  {
    cache.var[c] /= static_cast<double>( total );
    cache.inv_std[c] = 1.0 / std::sqrt( cache.var[c] + model_weights::bn_eps );
  }
  outputs.clear();
  xhats.clear();
  for ( auto const& emb : embeddings )
  {
    matrix out( emb.rows, e ), xh( emb.rows, e );
    for ( uint32_t r = 0; r < emb.rows; ++r )
    {
      for ( uint32_t c = 0; c < e; ++c )
      {
        double const xhat = ( emb.at( r, c ) - cache.mean[c] ) * cache.inv_std[c];
        xh.at( r, c ) = xhat;
        out.at( r, c ) = m.bn_scale[c] * xhat + m.bn_shift[c];
      }
    }
    outputs.push_back( std::move( out ) );
    xhats.push_back( std::move( xh ) );
  }
  return cache;
}

/*! \brief Backward through the message-passing layers for one sample. */
inline void backward_layers( model_weights const& m, gnn_sample const& s, sample_cache& cache,
                             matrix const& d_embedding, model_grads& grads )
{
  matrix dx = d_embedding; // gradient w.r.t. x[num_layers]
  for ( int k = model_weights::num_layers - 1; k >= 0; --k )
  {
    auto const& lc = cache.layers[k];
    uint32_t const h = m.hidden;
    // split the concatenation and undo relu
    matrix dz_pre( s.num_nodes, h ), dz_suc( s.num_nodes, h );
    for ( uint32_t v = 0; v < s.num_nodes; ++v )
    {
      for ( uint32_t c = 0; c < h; ++c )
      {
        dz_pre.at( v, c ) = lc.z_pre.at( v, c ) > 0.0 ? dx.at( v, c ) : 0.0;
        dz_suc.at( v, c ) = lc.z_suc.at( v, c ) > 0.0 ? dx.at( v, c + h ) : 0.0;
      }
    }
    // weight gradients and aggregation gradients
    matrix dagg_pre( s.num_nodes, lc.agg_pre.cols ), dagg_suc( s.num_nodes, lc.agg_suc.cols );
    for ( uint32_t v = 0; v < s.num_nodes; ++v )
    {
      double const* ap = lc.agg_pre.row( v );
      double const* as = lc.agg_suc.row( v );
      for ( uint32_t r = 0; r < h; ++r )
      {
        double const gp = dz_pre.at( v, r );
        if ( gp != 0.0 )
        {
          double* wrow = grads.w_pre[k].row( r );
          double const* wr = m.w_pre[k].row( r );
          double* dst = dagg_pre.row( v );
          for ( uint32_t c = 0; c < lc.agg_pre.cols; ++c )
          {
            wrow[c] += gp * ap[c];
            dst[c] += gp * wr[c];
          }
        }
        double const gs = dz_suc.at( v, r );
        if ( gs != 0.0 )
        {
          double* wrow = grads.w_suc[k].row( r );
          double const* wr = m.w_suc[k].row( r );
          double* dst = dagg_suc.row( v );
          for ( uint32_t c = 0; c < lc.agg_suc.cols; ++c )
          {
            wrow[c] += gs * as[c];
            dst[c] += gs * wr[c];
          }
        }
      }
    }
    // push aggregation gradients back to the previous layer's states
    matrix dprev( s.num_nodes, cache.x[k].cols );
    for ( uint32_t v = 0; v < s.num_nodes; ++v )
    {
      auto const& in = cache.adj.in_of[v];
      if ( !in.empty() )
      {
        double const inv = 1.0 / in.size();
        double const* src = dagg_pre.row( v );
        for ( uint32_t u : in )
        {
          double* dst = dprev.row( u );
          for ( uint32_t c = 0; c < dprev.cols; ++c )
          {
            dst[c] += inv * src[c];
          }
        }
      }
      auto const& out = cache.adj.out_of[v];
      if ( !out.empty() )
      {
        double const inv = 1.0 / out.size();
        double const* src = dagg_suc.row( v );
        for ( uint32_t u : out )
        {
          double* dst = dprev.row( u );
          for ( uint32_t c = 0; c < dprev.cols; ++c )
          {
            dst[c] += inv * src[c];
          }
        }
      }
    }
    dx = std::move( dprev );
  }
}

} // namespace detail

/*! \brief Batch loss and exact gradients.
 *
 * The topology loss is a two-way cross entropy; the routed subtype loss uses
 * the head selected by the current topology prediction (or the ground truth
 * when teacher forcing is requested) and is weighted by alpha.  A sample
 * whose true category differs from the routed head contributes no subtype
 * loss and is counted in `mismatched_routing`.
 */
inline loss_result loss_and_gradients( model_weights const& m, std::vector<gnn_sample const*> const& batch,
                                       loss_options const& opt = {} )
{
  loss_result result( m );
  if ( batch.empty() )
  {
    return result;
  }
  double const inv_batch = 1.0 / static_cast<double>( batch.size() );
  uint32_t const e = m.embed_dim();

  // phase 1: per-sample message passing
  std::vector<detail::sample_cache> caches;
  caches.reserve( batch.size() );
  std::vector<matrix> embeddings;
  for ( auto const* s : batch )
  {
    caches.emplace_back( *s );
    embeddings.push_back( detail::forward_layers( m, *s, caches.back() ) );
  }

  // phase 2: batch normalization over all nodes in the batch
  std::vector<matrix> bn_out, xhats;
  auto const bn_cache = detail::bn_forward_train( m, embeddings, bn_out, xhats );
  result.bn_batch_mean = bn_cache.mean;
  result.bn_batch_var = bn_cache.var;

  // phase 3: heads, loss, and gradients back to the normalized rows
  std::vector<matrix> d_bn_out( batch.size() );
  for ( size_t i = 0; i < batch.size(); ++i )
  {
    gnn_sample const& s = *batch[i];
    d_bn_out[i] = matrix( s.num_nodes, e );
    std::vector<double> h_g( e, 0.0 );
    for ( uint32_t r = 0; r < bn_out[i].rows; ++r )
    {
      for ( uint32_t c = 0; c < e; ++c )
      {
        h_g[c] += bn_out[i].at( r, c );
      }
    }
    for ( auto& v : h_g )
    {
      v /= bn_out[i].rows;
    }
    auto const scalars = detail::normalize_scalars( m, s.graph );
    std::vector<double> dh_g( e, 0.0 );

    auto apply_head = [&]( matrix const& w, matrix& wgrad, std::vector<double> const& input,
                           int label, double weight, std::vector<double>& din ) {
      std::vector<double> probs;
      detail::softmax( detail::mat_vec( w, input ), probs );
      result.loss += -std::log( std::max( probs[label], 1e-300 ) ) * weight;
      din.assign( input.size(), 0.0 );
      for ( uint32_t r = 0; r < w.rows; ++r )
      {
        double const delta = ( probs[r] - ( static_cast<int>( r ) == label ? 1.0 : 0.0 ) ) * weight;
        double const* wr = w.row( r );
        double* gr = wgrad.row( r );
        for ( uint32_t c = 0; c < w.cols; ++c )
        {
          gr[c] += delta * input[c];
          din[c] += delta * wr[c];
        }
      }
    };

    if ( m.task == model_task::ppa )
    {
      std::vector<double> input( h_g );
      input.push_back( scalars[2] );
      input.push_back( scalars[3] );
      input.push_back( scalars[4] );
      std::vector<double> din;
      apply_head( m.w_ppa, result.grads.w_ppa, input, s.subtype_label, inv_batch, din );
      for ( uint32_t c = 0; c < e; ++c )
      {
        dh_g[c] += din[c];
      }
    }
    else
    {
      std::vector<double> topo_in( h_g );
      topo_in.push_back( scalars[0] );
      std::vector<double> din;
      if ( opt.include_topo )
      {
        apply_head( m.w_topo, result.grads.w_topo, topo_in, s.topo_label, inv_batch, din );
        for ( uint32_t c = 0; c < e; ++c )
        {
          dh_g[c] += din[c];
        }
      }
      if ( opt.include_subtype )
      {
        std::vector<double> sub_in( h_g );
        sub_in.push_back( scalars[1] );
        sub_in.push_back( scalars[2] );
        sub_in.push_back( scalars[3] );
        sub_in.push_back( scalars[4] );
        auto run_sub_head = [&]( int head ) {
          if ( ( head == 0 && s.topo_label != 0 ) || ( head == 1 && s.topo_label != 1 ) )
          {
            ++result.mismatched_routing;
            return;
          }
          if ( head == 0 )
          {
            apply_head( m.w_nt, result.grads.w_nt, sub_in, s.subtype_label,
                        opt.alpha * inv_batch, din );
          }
          else
          {
            apply_head( m.w_tree, result.grads.w_tree, sub_in, s.subtype_label,
                        opt.alpha * inv_batch, din );
          }
          for ( uint32_t c = 0; c < e; ++c )
          {
            dh_g[c] += din[c];
          }
        };
        if ( opt.routed )
        {
          int routed_head = s.topo_label;
          if ( opt.route_by_prediction )
          {
            std::vector<double> topo_probs;
            detail::softmax( detail::mat_vec( m.w_topo, topo_in ), topo_probs );
            routed_head = topo_probs[1] > topo_probs[0] ? 1 : 0;
          }
          if ( opt.alpha != 0.0 )
          {
            run_sub_head( routed_head );
          }
        }
        else
        {
          // calibration mode: both heads, unrouted
          run_sub_head( 0 );
          run_sub_head( 1 );
        }
      }
    }

    // pool backward: every row shares the pooled gradient
    double const inv_rows = 1.0 / bn_out[i].rows;
    for ( uint32_t r = 0; r < bn_out[i].rows; ++r )
    {
      for ( uint32_t c = 0; c < e; ++c )
      {
        d_bn_out[i].at( r, c ) = dh_g[c] * inv_rows;
      }
    }
  }

  // phase 4: batch-norm backward (batch statistics couple all samples)
  size_t total_rows = 0;
  for ( auto const& emb : embeddings )
  {
    total_rows += emb.rows;
  }
  std::vector<double> sum_dxhat( e, 0.0 ), sum_dxhat_xhat( e, 0.0 );
  for ( size_t i = 0; i < batch.size(); ++i )
  {
    for ( uint32_t r = 0; r < d_bn_out[i].rows; ++r )
    {
      for ( uint32_t c = 0; c < e; ++c )
      {
        double const dy = d_bn_out[i].at( r, c );
        double const xh = xhats[i].at( r, c );
        result.grads.bn_scale[c] += dy * xh;
        result.grads.bn_shift[c] += dy;
        sum_dxhat[c] += dy * m.bn_scale[c];
        sum_dxhat_xhat[c] += dy * m.bn_scale[c] * xh;
      }
    }
  }
  double const inv_total = 1.0 / static_cast<double>( total_rows );
  for ( size_t i = 0; i < batch.size(); ++i )
  {
    matrix d_emb( d_bn_out[i].rows, e );
    for ( uint32_t r = 0; r < d_bn_out[i].rows; ++r )
    {
      for ( uint32_t c = 0; c < e; ++c )
      {
        double const dxhat = d_bn_out[i].at( r, c ) * m.bn_scale[c];
        d_emb.at( r, c ) =
            bn_cache.inv_std[c] *
            ( dxhat - inv_total * sum_dxhat[c] - xhats[i].at( r, c ) * inv_total * sum_dxhat_xhat[c] );
      }
    }
    detail::backward_layers( m, *batch[i], caches[i], d_emb, result.grads );
  }
  return result;
}

/*! \brief Fold one batch's statistics into the running normalization stats. */
inline void update_bn_running_stats( model_weights& m, loss_result const& batch_result,
                                     double momentum = 0.1 )
{
  for ( uint32_t c = 0; c < m.embed_dim(); ++c )
  {
    m.bn_mean[c] = ( 1.0 - momentum ) * m.bn_mean[c] + momentum * batch_result.bn_batch_mean[c];
    m.bn_var[c] = ( 1.0 - momentum ) * m.bn_var[c] + momentum * batch_result.bn_batch_var[c];
  }
}

/*! \brief Balancing coefficient from per-iteration squared gradient norms:
 * alpha = sqrt(mean topo / mean subtype).  A vanishing subtype stream is
 * reported and falls back to one.
 */
struct alpha_calibration
{
  double alpha{ 1.0 };
  bool degenerate{ false };
};

inline alpha_calibration
calibrate_alpha_from_norms( std::vector<std::pair<double, double>> const& squared_norms )
{
  if ( squared_norms.empty() )
  {
    return { 1.0, true };
  }
  double topo = 0.0, sub = 0.0;
  for ( auto const& [t, s] : squared_norms )
  {
    topo += t;
    sub += s;
  }
  topo /= squared_norms.size();
  sub /= squared_norms.size();
  if ( sub <= 0.0 )
  {
    return { 1.0, true };
  }
  return { std::sqrt( topo / sub ), false };
}

/*! \brief Measure gradient norms of the two loss streams on warm-up batches. */
inline alpha_calibration calibrate_alpha( model_weights const& m,
                                          std::vector<std::vector<gnn_sample const*>> const& warmup_batches )
{
  std::vector<std::pair<double, double>> norms;
  for ( auto const& batch : warmup_batches )
  {
    loss_options topo_only;
    topo_only.include_subtype = false;
    auto const topo_res = loss_and_gradients( m, batch, topo_only );
    loss_options sub_only;
    sub_only.include_topo = false;
    sub_only.routed = false;
    sub_only.alpha = 1.0;
    auto const sub_res = loss_and_gradients( m, batch, sub_only );
    norms.push_back( { topo_res.grads.squared_norm(), sub_res.grads.squared_norm() } );
  }
  return calibrate_alpha_from_norms( norms );
}

struct train_config
{
  uint32_t epochs{ 200 };
  double learning_rate{ 1e-3 };
  uint32_t batch_size{ 32 };
  double weight_decay{ 1e-5 };
  uint64_t seed{ 1 };
  uint32_t warmup_iters{ 100 };
  bool route_by_prediction{ true };
  uint32_t hidden{ 64 };
};

struct train_result
{
  model_weights weights;
  double best_validation_accuracy{ 0.0 };
  double first_epoch_loss{ 0.0 };
  double last_epoch_loss{ 0.0 };
  double alpha{ 1.0 };
};

namespace detail
{

struct adam_state
{
  std::vector<double> m1, m2;
  explicit adam_state( size_t n ) : m1( n, 0.0 ), m2( n, 0.0 ) {}
};

inline void adam_step( std::vector<double>& w, std::vector<double> const& g, adam_state& st,
                       double lr, double wd, uint64_t t )
{
  double const b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double const c1 = 1.0 - std::pow( b1, static_cast<double>( t ) );
  double const c2 = 1.0 - std::pow( b2, static_cast<double>( t ) );
  for ( size_t i = 0; i < w.size(); ++i )
  {
    double const grad = g[i] + wd * w[i];
    st.m1[i] = b1 * st.m1[i] + ( 1.0 - b1 ) * grad;
    st.m2[i] = b2 * st.m2[i] + ( 1.0 - b2 ) * grad * grad;
    w[i] -= lr * ( st.m1[i] / c1 ) / ( std::sqrt( st.m2[i] / c2 ) + eps );
  }
}

} // namespace detail

/*! \brief Top-1 accuracy of a model over labeled samples. */
inline double evaluate_accuracy( model_weights const& m, std::vector<gnn_sample> const& samples )
{
  if ( samples.empty() )
  {
    return 0.0;
  }
  uint32_t hits = 0;
  for ( auto const& s : samples )
  {
    prediction const pred = classify_sample( m, s );
    int const truth = m.task == model_task::ppa
                          ? s.subtype_label
                          : ( s.topo_label == 0 ? s.subtype_label : 4 + s.subtype_label );
    hits += pred.ranking.front().first == truth ? 1 : 0;
  }
  return static_cast<double>( hits ) / samples.size();
}

/*! \brief Train with the unified update rule: a warm-up phase at alpha = 1
 * records the gradient norms of both loss streams, the balancing coefficient
 * is calibrated from them, and training continues with per-parameter
 * adaptive steps.  Deterministic for a fixed seed; returns the weights with
 * the best validation accuracy.  A non-finite loss aborts with the offending
 * batch identified.
 */
inline train_result train( model_task task, std::vector<gnn_sample> const& train_set,
                           std::vector<gnn_sample> const& validation_set, train_config const& config )
{
  if ( train_set.empty() )
  {
    throw std::invalid_argument( "train: empty training set" );
  }
  model_weights m = init_model( task, config.seed, config.hidden );

  // scalar normalization statistics from the training set
  for ( size_t i = 0; i < 5; ++i )
  {
    double mean = 0.0, sq = 0.0;
    for ( auto const& s : train_set )
    {
      std::array<double, 5> const raw{ s.graph.f_level, s.graph.f_fan, s.graph.density,
                                       s.graph.clustering, s.graph.avg_degree };
      mean += raw[i];
      sq += raw[i] * raw[i];
    }
    mean /= train_set.size();
    sq /= train_set.size();
    m.scalar_mean[i] = mean;
    m.scalar_std[i] = std::sqrt( std::max( sq - mean * mean, 1e-12 ) );
  }

  std::array<detail::adam_state, 11> adam{
      detail::adam_state( m.w_pre[0].data.size() ), detail::adam_state( m.w_pre[1].data.size() ),
      detail::adam_state( m.w_pre[2].data.size() ), detail::adam_state( m.w_suc[0].data.size() ),
      detail::adam_state( m.w_suc[1].data.size() ), detail::adam_state( m.w_suc[2].data.size() ),
      detail::adam_state( m.bn_scale.size() ),      detail::adam_state( m.bn_shift.size() ),
      detail::adam_state( m.w_topo.data.size() ),
      detail::adam_state( m.w_nt.data.size() + m.w_tree.data.size() ),
      detail::adam_state( m.w_ppa.data.size() ) };
  detail::adam_state adam_nt( m.w_nt.data.size() );
  detail::adam_state adam_tree( m.w_tree.data.size() );

  rng gen( config.seed );
  std::vector<uint32_t> order( train_set.size() );
  for ( uint32_t i = 0; i < order.size(); ++i )
  {
    order[i] = i;
  }

  train_result result;
  result.alpha = 1.0;
  uint64_t step = 0;
  std::vector<std::pair<double, double>> warmup_norms;
  bool calibrated = task == model_task::ppa; // the flat model has one loss stream
  double best_acc = -1.0;

  for ( uint32_t epoch = 0; epoch < config.epochs; ++epoch )
  {
    // seeded shuffle
    for ( uint32_t i = static_cast<uint32_t>( order.size() ) - 1; i > 0; --i )
    {
      std::swap( order[i], order[gen.next_below( i + 1 )] );
    }
    double epoch_loss = 0.0;
    uint32_t num_batches = 0;
    for ( size_t begin = 0; begin < order.size(); begin += config.batch_size )
    {
      std::vector<gnn_sample const*> batch;
      for ( size_t i = begin; i < std::min( order.size(), begin + config.batch_size ); ++i )
      {
        batch.push_back( &train_set[order[i]] );
      }
      ++step;
      if ( !calibrated && step <= config.warmup_iters )
      {
        loss_options topo_only;
        topo_only.include_subtype = false;
        loss_options sub_only;
        sub_only.include_topo = false;
        sub_only.routed = false;
        warmup_norms.push_back( { loss_and_gradients( m, batch, topo_only ).grads.squared_norm(),
                                  loss_and_gradients( m, batch, sub_only ).grads.squared_norm() } );
        if ( step == config.warmup_iters )
        {
          result.alpha = calibrate_alpha_from_norms( warmup_norms ).alpha;
          calibrated = true;
        }
      }
      loss_options opt;
      opt.alpha = result.alpha;
      opt.route_by_prediction = config.route_by_prediction;
      auto const res = loss_and_gradients( m, batch, opt );
      if ( !std::isfinite( res.loss ) )
      {
        throw std::runtime_error( "train: loss diverged at step " + std::to_string( step ) );
      }
      epoch_loss += res.loss;
      ++num_batches;

      double const lr = config.learning_rate;
      double const wd = config.weight_decay;
      for ( uint32_t k = 0; k < 3; ++k )
      {
        detail::adam_step( m.w_pre[k].data, res.grads.w_pre[k].data, adam[k], lr, wd, step );
        detail::adam_step( m.w_suc[k].data, res.grads.w_suc[k].data, adam[3 + k], lr, wd, step );
      }
      detail::adam_step( m.bn_scale, res.grads.bn_scale, adam[6], lr, 0.0, step );
      detail::adam_step( m.bn_shift, res.grads.bn_shift, adam[7], lr, 0.0, step );
      if ( task == model_task::fsa )
      {
        detail::adam_step( m.w_topo.data, res.grads.w_topo.data, adam[8], lr, wd, step );
        detail::adam_step( m.w_nt.data, res.grads.w_nt.data, adam_nt, lr, wd, step );
        detail::adam_step( m.w_tree.data, res.grads.w_tree.data, adam_tree, lr, wd, step );
      }
      else
      {
        detail::adam_step( m.w_ppa.data, res.grads.w_ppa.data, adam[10], lr, wd, step );
      }
      update_bn_running_stats( m, res );
    }
    epoch_loss /= std::max( 1u, num_batches );
    if ( epoch == 0 )
    {
      result.first_epoch_loss = epoch_loss;
    }
    result.last_epoch_loss = epoch_loss;

    double const acc = evaluate_accuracy( m, validation_set.empty() ? train_set : validation_set );
    if ( acc > best_acc )
    {
      best_acc = acc;
      result.weights = m;
    }
  }
  result.weights.alpha = result.alpha;
  result.best_validation_accuracy = best_acc;
  return result;
}

// ---------------------------------------------------------------------------
// model serialization: versioned UTF-8 container, see docs/model-format.md
// ---------------------------------------------------------------------------

namespace detail
{

inline void write_values( std::ostream& os, std::vector<double> const& v )
{
  os.precision( 17 );
  for ( size_t i = 0; i < v.size(); ++i )
  {
    os << v[i] << ( ( i + 1 ) % 8 == 0 || i + 1 == v.size() ? '\n' : ' ' );
  }
}

inline void write_tensor( std::ostream& os, std::string const& name, matrix const& m )
{
  os << "tensor " << name << ' ' << m.rows << ' ' << m.cols << '\n';
  write_values( os, m.data );
}

inline void write_vector( std::ostream& os, std::string const& name, std::vector<double> const& v )
{
  os << "tensor " << name << " 1 " << v.size() << '\n';
  write_values( os, v );
}

} // namespace detail

inline void save_model( model_weights const& m, std::ostream& os )
{
  os << "reveal-model " << model_weights::version << '\n';
  os << "task " << ( m.task == model_task::fsa ? "fsa" : "ppa" ) << '\n';
  os << "hidden " << m.hidden << '\n';
  os.precision( 17 );
  os << "alpha " << m.alpha << '\n';
  os << "scalar_mean";
  for ( double v : m.scalar_mean )
  {
    os << ' ' << v;
  }
  os << "\nscalar_std";
  for ( double v : m.scalar_std )
  {
    os << ' ' << v;
  }
  os << '\n';
  for ( uint32_t k = 0; k < model_weights::num_layers; ++k )
  {
    detail::write_tensor( os, "w_pre" + std::to_string( k ), m.w_pre[k] );
    detail::write_tensor( os, "w_suc" + std::to_string( k ), m.w_suc[k] );
  }
  detail::write_vector( os, "bn_scale", m.bn_scale );
  detail::write_vector( os, "bn_shift", m.bn_shift );
  detail::write_vector( os, "bn_mean", m.bn_mean );
  detail::write_vector( os, "bn_var", m.bn_var );
  detail::write_tensor( os, "w_topo", m.w_topo );
  detail::write_tensor( os, "w_nt", m.w_nt );
  detail::write_tensor( os, "w_tree", m.w_tree );
  detail::write_tensor( os, "w_ppa", m.w_ppa );
  os << "end\n";
}

inline void save_model( model_weights const& m, std::string const& path )
{
  std::ofstream os( path, std::ios::trunc );
  if ( !os )
  {
    throw std::runtime_error( "save_model: cannot open " + path );
  }
  save_model( m, os );
}

inline model_weights load_model( std::istream& is )
{
  auto fail = []( std::string const& what ) -> model_weights {
    throw std::runtime_error( "load_model: " + what );
  };
  std::string word;
  uint32_t version = 0;
  if ( !( is >> word >> version ) || word != "reveal-model" )
  {
    return fail( "not a model file" );
  }
  if ( version != model_weights::version )
  {
    return fail( "unsupported format version " + std::to_string( version ) );
  }
  model_weights m;
  std::string task;
  if ( !( is >> word >> task ) || word != "task" || ( task != "fsa" && task != "ppa" ) )
  {
    return fail( "missing task" );
  }
  m.task = task == "fsa" ? model_task::fsa : model_task::ppa;
  if ( !( is >> word >> m.hidden ) || word != "hidden" )
  {
    return fail( "missing hidden dimension" );
  }
  if ( !( is >> word >> m.alpha ) || word != "alpha" )
  {
    return fail( "missing alpha" );
  }
  if ( !( is >> word ) || word != "scalar_mean" )
  {
    return fail( "missing scalar statistics" );
  }
  for ( auto& v : m.scalar_mean )
  {
    if ( !( is >> v ) )
    {
      return fail( "truncated scalar statistics" );
    }
  }
  if ( !( is >> word ) || word != "scalar_std" )
  {
    return fail( "missing scalar statistics" );
  }
  for ( auto& v : m.scalar_std )
  {
    if ( !( is >> v ) )
    {
      return fail( "truncated scalar statistics" );
    }
  }

  auto read_tensor = [&]( std::string const& expected, uint32_t rows, uint32_t cols ) -> matrix {
    std::string kw, name;
    uint32_t r = 0, c = 0;
    if ( !( is >> kw >> name >> r >> c ) || kw != "tensor" || name != expected )
    {
      fail( "expected tensor " + expected );
    }
    if ( r != rows || c != cols )
    {
      fail( "dimension mismatch for " + expected );
    }
    matrix t( r, c );
    for ( auto& v : t.data )
    {
      if ( !( is >> v ) )
      {
        fail( "truncated tensor " + expected );
      }
    }
    return t;
  };

  uint32_t const e = 2 * m.hidden;
  for ( uint32_t k = 0; k < model_weights::num_layers; ++k )
  {
    m.w_pre[k] = read_tensor( "w_pre" + std::to_string( k ), m.hidden,
                              k == 0 ? node_feature_dim : e );
    m.w_suc[k] = read_tensor( "w_suc" + std::to_string( k ), m.hidden,
                              k == 0 ? node_feature_dim : e );
  }
  m.bn_scale = read_tensor( "bn_scale", 1, e ).data;
  m.bn_shift = read_tensor( "bn_shift", 1, e ).data;
  m.bn_mean = read_tensor( "bn_mean", 1, e ).data;
  m.bn_var = read_tensor( "bn_var", 1, e ).data;
  m.w_topo = read_tensor( "w_topo", 2, e + 1 );
  m.w_nt = read_tensor( "w_nt", 4, e + 4 );
  m.w_tree = read_tensor( "w_tree", 5, e + 4 );
  m.w_ppa = read_tensor( "w_ppa", 5, e + 3 );
  if ( !( is >> word ) || word != "end" )
  {
    return fail( "missing end marker" );
  }
  return m;
}

inline model_weights load_model( std::string const& path )
{
  std::ifstream is( path );
  if ( !is )
  {
    throw std::runtime_error( "load_model: cannot open " + path );
  }
  return load_model( is );
}

} // namespace reveal
