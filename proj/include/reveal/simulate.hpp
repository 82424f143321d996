#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "aig.hpp"
#include "rng.hpp"

namespace reveal
{

/*! \brief Bit-parallel evaluator: one 64-bit word per node, 64 patterns per pass.
 *
 * The buffer is reusable across batches; values are plain (pre-complement)
 * node values, with the constant node all-zero.
 */
class simulator
{
public:
  explicit simulator( aig const& g ) : g_( g ), values_( g.num_nodes() ) {}

  /*! \brief Evaluate one batch; `input_words[i]` carries 64 values of input i. */
  void eval( std::vector<uint64_t> const& input_words )
  {
    if ( input_words.size() != g_.num_inputs() )
    {
      throw std::invalid_argument( "simulate: word count does not match the number of inputs" );
    }
    values_[0] = 0;
    for ( uint32_t i = 0; i < g_.num_inputs(); ++i )
    {
      values_[i + 1] = input_words[i];
    }
    for ( uint32_t i = 0; i < g_.num_gates(); ++i )
    {
      auto const& gt = g_.gates()[i];
      uint64_t const a = values_[gt.fanin0.node()] ^ ( gt.fanin0.complemented() ? ~0ull : 0ull );
      uint64_t const b = values_[gt.fanin1.node()] ^ ( gt.fanin1.complemented() ? ~0ull : 0ull );
      values_[g_.num_inputs() + 1 + i] = a & b;
    }
  }

  uint64_t node_word( uint32_t node ) const { return values_[node]; }

  uint64_t literal_word( literal l ) const
  {
    return values_[l.node()] ^ ( l.complemented() ? ~0ull : 0ull );
  }

  uint64_t output_word( uint32_t index ) const { return literal_word( g_.output( index ) ); }

private:
  aig const& g_;
  std::vector<uint64_t> values_;
};

/*! \brief Simulate a whole pattern set; `inputs[i]` holds the words of input i.
 *
 * All input vectors must have the same length.  Returns one word vector per
 * output.  Processing is streamed batch by batch, so memory stays linear in
 * the node count.
 */
inline std::vector<std::vector<uint64_t>> simulate( aig const& g,
                                                    std::vector<std::vector<uint64_t>> const& inputs )
{
  if ( inputs.size() != g.num_inputs() )
  {
    throw std::invalid_argument( "simulate: word count does not match the number of inputs" );
  }
  size_t const words = inputs.empty() ? 1 : inputs.front().size();
  for ( auto const& v : inputs )
  {
    if ( v.size() != words )
    {
      throw std::invalid_argument( "simulate: input vectors differ in length" );
    }
  }
  std::vector<std::vector<uint64_t>> result( g.num_outputs(), std::vector<uint64_t>( words ) );
  simulator sim( g );
  std::vector<uint64_t> batch( g.num_inputs() );
  for ( size_t w = 0; w < words; ++w )
  {
    for ( uint32_t i = 0; i < g.num_inputs(); ++i )
    {
      batch[i] = inputs[i][w];
    }
    sim.eval( batch );
    for ( uint32_t o = 0; o < g.num_outputs(); ++o )
    {
      result[o][w] = sim.output_word( o );
    }
  }
  return result;
}

/*! \brief Logic level of every node: inputs and constant at 0, gates at
 * 1 + max(fanin levels).  Complement edges do not add depth.
 */
inline std::vector<uint32_t> logic_levels( aig const& g )
{
  std::vector<uint32_t> level( g.num_nodes(), 0 );
  for ( uint32_t i = 0; i < g.num_gates(); ++i )
  {
    auto const& gt = g.gates()[i];
    level[g.num_inputs() + 1 + i] = 1 + std::max( level[gt.fanin0.node()], level[gt.fanin1.node()] );
  }
  return level;
}

inline uint32_t logic_level( aig const& g, uint32_t node )
{
  if ( node >= g.num_nodes() )
  {
    throw std::out_of_range( "logic_level: unknown node" );
  }
  return logic_levels( g )[node];
}

/*! \brief Structural support of every node as bitsets over input indices. */
class support_map
{
public:
  explicit support_map( aig const& g ) : g_( g ), words_( ( g.num_inputs() + 63 ) / 64 )
  {
    bits_.assign( static_cast<size_t>( g.num_nodes() ) * words_, 0ull );
    sizes_.assign( g.num_nodes(), 0 );
    for ( uint32_t i = 1; i <= g.num_inputs(); ++i )
    {
      bits_[static_cast<size_t>( i ) * words_ + ( i - 1 ) / 64] = 1ull << ( ( i - 1 ) % 64 );
      sizes_[i] = 1;
    }
    for ( uint32_t i = 0; i < g.num_gates(); ++i )
    {
      uint32_t const node = g.num_inputs() + 1 + i;
      auto const& gt = g.gates()[i];
      size_t const dst = static_cast<size_t>( node ) * words_;
      size_t const s0 = static_cast<size_t>( gt.fanin0.node() ) * words_;
      size_t const s1 = static_cast<size_t>( gt.fanin1.node() ) * words_;
      uint32_t count = 0;
      for ( size_t w = 0; w < words_; ++w )
      {
        bits_[dst + w] = bits_[s0 + w] | bits_[s1 + w];
        count += static_cast<uint32_t>( __builtin_popcountll( bits_[dst + w] ) );
      }
      sizes_[node] = count;
    }
  }

  uint32_t size_of( uint32_t node ) const { return sizes_[node]; }

  /*! \brief Input node ids (1-based) in the support of `node`. */
  std::vector<uint32_t> inputs_of( uint32_t node ) const
  {
    std::vector<uint32_t> result;
    size_t const base = static_cast<size_t>( node ) * words_;
    for ( size_t w = 0; w < words_; ++w )
    {
      uint64_t bits = bits_[base + w];
      while ( bits )
      {
        uint32_t const b = static_cast<uint32_t>( __builtin_ctzll( bits ) );
        result.push_back( static_cast<uint32_t>( w * 64 + b + 1 ) );
        bits &= bits - 1;
      }
    }
    return result;
  }

private:
  aig const& g_;
  size_t words_;
  std::vector<uint64_t> bits_;
  std::vector<uint32_t> sizes_;
};

/*! \brief Primary inputs with a directed path to `node`. */
inline std::vector<uint32_t> support( aig const& g, uint32_t node )
{
  if ( node >= g.num_nodes() )
  {
    throw std::out_of_range( "support: unknown node" );
  }
  return support_map( g ).inputs_of( node );
}

inline uint32_t support_size( aig const& g, uint32_t node )
{
  if ( node >= g.num_nodes() )
  {
    throw std::out_of_range( "support: unknown node" );
  }
  return support_map( g ).size_of( node );
}

/*! \brief Compare two circuits on `num_vectors` random patterns. */
inline bool random_sim_equal( aig const& a, aig const& b, uint64_t num_vectors, uint64_t seed,
                              std::atomic<bool> const* cancel = nullptr )
{
  if ( a.num_inputs() != b.num_inputs() || a.num_outputs() != b.num_outputs() )
  {
    return false;
  }
  rng gen( seed );
  simulator sa( a ), sb( b );
  std::vector<uint64_t> words( a.num_inputs() );
  uint64_t const batches = ( num_vectors + 63 ) / 64;
  for ( uint64_t i = 0; i < batches; ++i )
  {
    if ( cancel && cancel->load( std::memory_order_relaxed ) )
    {
      return true; // caller is abandoning the check
    }
    for ( auto& w : words )
    {
      w = gen.next_u64();
    }
    sa.eval( words );
    sb.eval( words );
    for ( uint32_t o = 0; o < a.num_outputs(); ++o )
    {
      if ( sa.output_word( o ) != sb.output_word( o ) )
      {
        return false;
      }
    }
  }
  return true;
}

/*! \brief Exhaustively check that a 2N-input, 2N-output circuit computes
 * unsigned a*b mod 2^(2N).  Only feasible for small widths.
 */
inline bool exhaustive_product_check( aig const& g, uint32_t width )
{
  if ( g.num_inputs() != 2 * width || g.num_outputs() != 2 * width )
  {
    return false;
  }
  uint64_t const total = 1ull << ( 2 * width );
  simulator sim( g );
  std::vector<uint64_t> words( 2 * width );
  for ( uint64_t base = 0; base < total; base += 64 )
  {
    uint64_t const lanes = std::min<uint64_t>( 64, total - base );
    for ( uint32_t i = 0; i < 2 * width; ++i )
    {
      uint64_t w = 0;
      for ( uint64_t lane = 0; lane < lanes; ++lane )
      {
        uint64_t const assignment = base + lane;
        w |= ( ( assignment >> i ) & 1ull ) << lane;
      }
      words[i] = w;
    }
    sim.eval( words );
    for ( uint64_t lane = 0; lane < lanes; ++lane )
    {
      uint64_t const assignment = base + lane;
      uint64_t const a = assignment & ( ( 1ull << width ) - 1 );
      uint64_t const b = assignment >> width;
      unsigned __int128 const product = static_cast<unsigned __int128>( a ) * b;
      for ( uint32_t o = 0; o < 2 * width; ++o )
      {
        uint64_t const expected = static_cast<uint64_t>( ( product >> o ) & 1 );
        if ( ( ( sim.output_word( o ) >> lane ) & 1 ) != expected )
        {
          return false;
        }
      }
    }
  }
  return true;
}

/*! \brief Randomized product check for widths where exhaustion is infeasible. */
inline bool random_product_check( aig const& g, uint32_t width, uint64_t num_vectors, uint64_t seed )
{
  if ( g.num_inputs() != 2 * width || g.num_outputs() != 2 * width || width > 64 )
  {
    return false;
  }
  rng gen( seed );
  simulator sim( g );
  std::vector<uint64_t> words( 2 * width );
  uint64_t const batches = ( num_vectors + 63 ) / 64;
  for ( uint64_t batch = 0; batch < batches; ++batch )
  {
    for ( auto& w : words )
    {
      w = gen.next_u64();
    }
    sim.eval( words );
    for ( uint32_t lane = 0; lane < 64; ++lane )
    {
      unsigned __int128 a = 0, b = 0;
      for ( uint32_t i = 0; i < width; ++i )
      {
        a |= static_cast<unsigned __int128>( ( words[i] >> lane ) & 1 ) << i;
        b |= static_cast<unsigned __int128>( ( words[width + i] >> lane ) & 1 ) << i;
      }
      unsigned __int128 const product = a * b;
      for ( uint32_t o = 0; o < 2 * width; ++o )
      {
        if ( ( ( sim.output_word( o ) >> lane ) & 1 ) !=
             static_cast<uint64_t>( ( product >> o ) & 1 ) )
        {
          return false;
        }
      }
    }
  }
  return true;
}

} // namespace reveal
