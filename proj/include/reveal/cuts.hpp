#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "aig.hpp"

namespace reveal
{

/*! \brief A cut of `root`: every input-to-root path passes through a leaf. */
struct cut
{
  uint32_t root{ 0 };
  std::vector<uint32_t> leaves; // sorted node ids

  uint64_t signature() const
  {
    uint64_t s = 0;
    for ( auto l : leaves )
    {
      s |= 1ull << ( l & 63u );
    }
    return s;
  }
};

struct cut_params
{
  uint32_t k{ 4 };   // maximum leaf count
  uint32_t cap{ 16 }; // cuts kept per node, smallest first
};

/*! \brief Bottom-up k-feasible cut enumeration with per-node capping.
 *
 * Fanin cut sets are cross-merged, oversized and dominated cuts are
 * dropped, and the trivial cut is always present.  Capping prefers cuts
 * with fewer leaves, which keeps the matcher's candidates cheap.
 */
class cut_enumerator
{
public:
  cut_enumerator( aig const& g, cut_params params = {} ) : g_( g ), params_( params )
  {
    if ( params_.k < 2 || params_.k > 6 )
    {
      throw std::invalid_argument( "cut_enumerator: k must be between 2 and 6" );
    }
    compute();
  }

  std::vector<cut> const& cuts_of( uint32_t node ) const
  {
    if ( node >= g_.num_nodes() )
    {
      throw std::out_of_range( "cut_enumerator: unknown node" );
    }
    return sets_[node];
  }

private:
  struct proto_cut
  {
    std::vector<uint32_t> leaves;
    uint64_t sig;
  };

  static bool dominates( proto_cut const& a, proto_cut const& b )
  {
    // a dominates b if a's leaves are a subset of b's
    if ( a.leaves.size() > b.leaves.size() || ( a.sig & ~b.sig ) != 0 )
    {
      return false;
    }
    return std::includes( b.leaves.begin(), b.leaves.end(), a.leaves.begin(), a.leaves.end() );
  }

  void compute()
  {
    sets_.resize( g_.num_nodes() );
    sets_[0] = { cut{ 0, { 0 } } };
    for ( uint32_t i = 1; i <= g_.num_inputs(); ++i )
    {
      sets_[i] = { cut{ i, { i } } };
    }
    std::vector<proto_cut> merged;
    for ( uint32_t gi = 0; gi < g_.num_gates(); ++gi )
    {
      uint32_t const node = g_.num_inputs() + 1 + gi;
      auto const& f0 = sets_[g_.gates()[gi].fanin0.node()];
      auto const& f1 = sets_[g_.gates()[gi].fanin1.node()];
      merged.clear();
      for ( auto const& c0 : f0 )
      {
        for ( auto const& c1 : f1 )
        {
          proto_cut pc;
          pc.leaves.resize( c0.leaves.size() + c1.leaves.size() );
          auto const end = std::set_union( c0.leaves.begin(), c0.leaves.end(), c1.leaves.begin(),
                                           c1.leaves.end(), pc.leaves.begin() );
          pc.leaves.erase( end, pc.leaves.end() );
          if ( pc.leaves.size() > params_.k )
          {
            continue;
          }
          pc.sig = 0;
          for ( auto l : pc.leaves )
          {
            pc.sig |= 1ull << ( l & 63u );
          }
          bool dominated = false;
          for ( auto const& other : merged )
          {
            if ( dominates( other, pc ) )
            {
              dominated = true;
              break;
            }
          }
          if ( dominated )
          {
            continue;
          }
          merged.erase( std::remove_if( merged.begin(), merged.end(),
                                        [&]( proto_cut const& other ) { return dominates( pc, other ); } ),
                        merged.end() );
          merged.push_back( std::move( pc ) );
        }
      }
      std::sort( merged.begin(), merged.end(), []( proto_cut const& a, proto_cut const& b ) {
        return a.leaves.size() != b.leaves.size() ? a.leaves.size() < b.leaves.size()
                                                  : a.leaves < b.leaves;
      } );
      if ( merged.size() > params_.cap )
      {
        merged.resize( params_.cap );
      }
      auto& set = sets_[node];
      set.clear();
      set.push_back( cut{ node, { node } } );
      for ( auto& pc : merged )
      {
        set.push_back( cut{ node, std::move( pc.leaves ) } );
      }
    }
  }

  aig const& g_;
  cut_params params_;
  std::vector<std::vector<cut>> sets_;
};

/*! \brief All k-feasible cuts of one node (trivial cut included). */
inline std::vector<cut> enumerate_cuts( aig const& g, uint32_t node, uint32_t k = 4, uint32_t cap = 16 )
{
  return cut_enumerator( g, { k, cap } ).cuts_of( node );
}

/*! \brief Boolean function over at most six inputs, packed into one word.
 * Bit i is the value on the assignment whose bits follow the leaf order.
 */
struct truth_table
{
  uint32_t n{ 0 };
  uint64_t bits{ 0 };

  uint64_t mask() const { return n >= 6 ? ~0ull : ( ( 1ull << ( 1u << n ) ) - 1 ); }

  bool operator==( truth_table const& other ) const
  {
    return n == other.n && ( bits & mask() ) == ( other.bits & other.mask() );
  }
};

/*! \brief Projection of variable `v` among `n` inputs. */
inline uint64_t tt_var( uint32_t v, uint32_t n )
{
  static constexpr uint64_t proj[6] = {
      0xaaaaaaaaaaaaaaaaull, 0xccccccccccccccccull, 0xf0f0f0f0f0f0f0f0ull,
      0xff00ff00ff00ff00ull, 0xffff0000ffff0000ull, 0xffffffff00000000ull };
  (void)n;
  return proj[v];
}

/*! \brief Truth table of `c.root` as a function of `c.leaves`, by simulating
 * the cut's interior on all 2^n assignments.
 */
inline truth_table cut_function( aig const& g, cut const& c )
{
  if ( c.leaves.size() > 6 )
  {
    throw std::invalid_argument( "cut_function: more than six leaves" );
  }
  uint32_t const n = static_cast<uint32_t>( c.leaves.size() );
  std::vector<uint32_t> stack{ c.root };
  std::vector<uint64_t> value( g.num_nodes(), 0 );
  std::vector<uint8_t> state( g.num_nodes(), 0 ); // 2 = evaluated leaf, 3 = evaluated interior
  for ( uint32_t i = 0; i < n; ++i )
  {
    state[c.leaves[i]] = 2;
    value[c.leaves[i]] = tt_var( i, n );
  }
  while ( !stack.empty() )
  {
    uint32_t const node = stack.back();
    if ( state[node] == 2 || state[node] == 3 )
    {
      stack.pop_back();
      continue;
    }
    if ( !g.is_gate( node ) )
    {
      if ( g.is_constant( node ) )
      {
        state[node] = 2;
        value[node] = 0;
        stack.pop_back();
        continue;
      }
      throw std::invalid_argument( "cut_function: leaves do not form a cut of the root" );
    }
    auto const& gt = g.gate( node );
    bool ready = true;
    for ( literal f : { gt.fanin0, gt.fanin1 } )
    {
      if ( state[f.node()] < 2 )
      {
        ready = false;
        stack.push_back( f.node() );
      }
    }
    if ( !ready )
    {
      continue;
    }
    uint64_t const a = value[gt.fanin0.node()] ^ ( gt.fanin0.complemented() ? ~0ull : 0ull );
    uint64_t const b = value[gt.fanin1.node()] ^ ( gt.fanin1.complemented() ? ~0ull : 0ull );
    value[node] = a & b;
    state[node] = 3;
    stack.pop_back();
  }
  truth_table tt;
  tt.n = n;
  tt.bits = value[c.root] & truth_table{ n, ~0ull }.mask();
  return tt;
}

} // namespace reveal
