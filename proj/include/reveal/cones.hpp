#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "aig.hpp"
#include "mulgen.hpp"
#include "simulate.hpp"

namespace reveal
{

enum class cone_kind : uint8_t
{
  lsb,
  msb
};

/*! \brief A stage-specific subcircuit re-indexed as its own AIG.
 *
 * `boundary_inputs[i]` is the node in the original circuit that became the
 * cone's input i; `root_outputs` are the original output indices the cone
 * covers.  For MSB cones `cut_depth_used` records the effective cut depth
 * (it can be smaller than the requested depth when the node cap bites).
 */
struct cone
{
  cone_kind kind{ cone_kind::lsb };
  aig sub;
  std::vector<uint32_t> boundary_inputs;
  std::vector<uint32_t> root_outputs;
  std::optional<uint32_t> cut_depth_used;
};

/*! \brief Cut depth for the MSB cone: K = 5 + 2*floor(log2(N)). */
inline uint32_t k_cut_depth( uint32_t width )
{
  if ( width < 2 )
  {
    throw std::invalid_argument( "k_cut_depth: width must be at least 2" );
  }
  uint32_t log2 = 0;
  while ( ( 1u << ( log2 + 1 ) ) <= width )
  {
    ++log2;
  }
  return 5 + 2 * log2;
}

/*! \brief Default LSB cone output count; small widths use half the product bits. */
inline uint32_t default_lsb_count( uint32_t width )
{
  return width < 16 ? width / 2 : 8;
}

namespace detail
{

/*! \brief Re-index `keep` gates (topological by original id) into a fresh AIG. */
inline cone make_cone( aig const& g, cone_kind kind, std::vector<bool> const& interior,
                       std::vector<uint32_t> const& boundary,
                       std::vector<uint32_t> const& root_outputs,
                       std::optional<uint32_t> cut_depth )
{
  aig_builder b;
  std::vector<literal> map( g.num_nodes(), literal::constant( false ) );
  for ( uint32_t node : boundary )
  {
    map[node] = b.add_input();
  }
  for ( uint32_t i = 0; i < g.num_gates(); ++i )
  {
    uint32_t const node = g.gate_node( i );
    if ( !interior[node] )
    {
      continue;
    }
    auto const& gt = g.gates()[i];
    map[node] = b.add_and( map[gt.fanin0.node()] ^ gt.fanin0.complemented(),
                           map[gt.fanin1.node()] ^ gt.fanin1.complemented() );
  }
  for ( uint32_t out : root_outputs )
  {
    literal const o = g.output( out );
    b.add_output( map[o.node()] ^ o.complemented() );
  }
  cone c;
  c.kind = kind;
  c.sub = b.build();
  c.boundary_inputs = boundary;
  c.root_outputs = root_outputs;
  c.cut_depth_used = cut_depth;
  return c;
}

} // namespace detail

/*! \brief Transitive fan-in cone of the C least significant outputs.
 * The cone's inputs are the original primary inputs it reaches.
 */
inline cone extract_lsb_cone( aig const& g, uint32_t count = 8 )
{
  if ( count == 0 || count > g.num_outputs() )
  {
    throw std::invalid_argument( "extract_lsb_cone: output count out of range" );
  }
  std::vector<bool> interior( g.num_nodes(), false );
  std::vector<bool> reached_input( g.num_nodes(), false );
  std::vector<uint32_t> stack;
  for ( uint32_t o = 0; o < count; ++o )
  {
    stack.push_back( g.output( o ).node() );
  }
  std::vector<bool> seen( g.num_nodes(), false );
  while ( !stack.empty() )
  {
    uint32_t const n = stack.back();
    stack.pop_back();
    if ( seen[n] )
    {
      continue;
    }
    seen[n] = true;
    if ( g.is_input( n ) )
    {
      reached_input[n] = true;
      continue;
    }
    if ( !g.is_gate( n ) )
    {
      continue;
    }
    interior[n] = true;
    stack.push_back( g.gate( n ).fanin0.node() );
    stack.push_back( g.gate( n ).fanin1.node() );
  }
  std::vector<uint32_t> boundary;
  for ( uint32_t i = 1; i <= g.num_inputs(); ++i )
  {
    if ( reached_input[i] )
    {
      boundary.push_back( i );
    }
  }
  std::vector<uint32_t> roots( count );
  for ( uint32_t o = 0; o < count; ++o )
  {
    roots[o] = o;
  }
  return detail::make_cone( g, cone_kind::lsb, interior, boundary, roots, std::nullopt );
}

/*! \brief Depth-bounded fan-in cone of the L most significant outputs.
 *
 * Gates within `k` levels of the nearest root are interior.  Level fronts
 * are added whole until the next front would push the cone past `node_cap`;
 * the depth actually applied is returned in `cut_depth_used`.  The cut
 * frontier (and any primary input reached) becomes an anonymous cone input.
 */
inline cone extract_msb_cone( aig const& g, uint32_t count = 8, uint32_t k = 8,
                              uint32_t node_cap = 900 )
{
  if ( count == 0 || count > g.num_outputs() )
  {
    throw std::invalid_argument( "extract_msb_cone: output count out of range" );
  }
  if ( k < 1 )
  {
    throw std::invalid_argument( "extract_msb_cone: cut depth must be positive" );
  }
  std::vector<uint32_t> roots;
  for ( uint32_t o = g.num_outputs() - count; o < g.num_outputs(); ++o )
  {
    roots.push_back( o );
  }

  // breadth-first from the root gates; a gate is interior when its level
  // distance from the nearest root is at most the cut depth
  auto explore = [&]( uint32_t depth_limit, std::vector<bool>& interior,
                      std::vector<uint32_t>& boundary ) -> uint32_t {
    interior.assign( g.num_nodes(), false );
    boundary.clear();
    std::vector<bool> queued( g.num_nodes(), false );
    std::vector<uint32_t> front;
    for ( uint32_t out : roots )
    {
      uint32_t const n = g.output( out ).node();
      if ( g.is_gate( n ) && !queued[n] )
      {
        queued[n] = true;
        front.push_back( n );
      }
    }
    uint32_t depth_used = 0;
    for ( uint32_t depth = 1; depth <= depth_limit && !front.empty(); ++depth )
    {
      std::vector<uint32_t> next;
      for ( uint32_t n : front )
      {
        interior[n] = true;
      }
      depth_used = depth;
      for ( uint32_t n : front )
      {
        for ( literal f : { g.gate( n ).fanin0, g.gate( n ).fanin1 } )
        {
          uint32_t const c = f.node();
          if ( g.is_gate( c ) && !queued[c] )
          {
            queued[c] = true;
            next.push_back( c );
          }
        }
      }
      front = std::move( next );
    }
    // boundary: non-interior fanins of interior gates, plus inputs that
    // drive cone roots directly
    std::vector<bool> is_boundary( g.num_nodes(), false );
    auto mark = [&]( uint32_t n ) {
      if ( !g.is_constant( n ) && !interior[n] && !is_boundary[n] )
      {
        is_boundary[n] = true;
        boundary.push_back( n );
      }
    };
    for ( uint32_t i = 0; i < g.num_gates(); ++i )
    {
      if ( !interior[g.gate_node( i )] )
      {
        continue;
      }
      mark( g.gates()[i].fanin0.node() );
      mark( g.gates()[i].fanin1.node() );
    }
    for ( uint32_t out : roots )
    {
      uint32_t const n = g.output( out ).node();
      if ( !g.is_constant( n ) && !interior[n] )
      {
        mark( n );
      }
    }
    std::sort( boundary.begin(), boundary.end() );
    return depth_used;
  };

  std::vector<bool> interior;
  std::vector<uint32_t> boundary;
  uint32_t depth_used = 0;
  for ( uint32_t depth = k; depth >= 1; --depth )
  {
    depth_used = explore( depth, interior, boundary );
    uint32_t interior_count = 0;
    for ( bool b : interior )
    {
      interior_count += b ? 1 : 0;
    }
    if ( interior_count + boundary.size() + 1 <= node_cap || depth == 1 )
    {
      break;
    }
    if ( depth_used < depth )
    {
      depth = depth_used + 1; // exploration exhausted earlier than the limit
    }
  }
  return detail::make_cone( g, cone_kind::msb, interior, boundary, roots, depth_used );
}

/*! \brief Outcome of the analytic partial-product-generator test. */
struct ppg_verdict
{
  ppg_kind kind{ ppg_kind::simple };
  std::optional<uint32_t> radix_estimate;
  uint32_t slice_levels{ 0 };
};

/*! \brief Decide simple vs. Booth encoding by graph analysis.
 *
 * The slice of all nodes whose structural support is exactly two primary
 * inputs holds the product generators.  Plain conjunctions keep the slice at
 * one level and parity structures at two; the chained selector logic of a
 * Booth encoder stacks a third level on top of a two-input parity, so the
 * verdict is Booth exactly when the slice is deeper than two levels.
 */
inline ppg_verdict detect_ppg( aig const& g )
{
  support_map const supp( g );
  std::vector<bool> in_slice( g.num_nodes(), false );
  std::vector<uint32_t> slice_level( g.num_nodes(), 0 );
  uint32_t max_level = 0;
  bool any = false;
  for ( uint32_t i = 0; i < g.num_gates(); ++i )
  {
    uint32_t const node = g.gate_node( i );
    if ( supp.size_of( node ) != 2 )
    {
      continue;
    }
    in_slice[node] = true;
    any = true;
    uint32_t lvl = 1;
    for ( literal f : { g.gates()[i].fanin0, g.gates()[i].fanin1 } )
    {
      if ( in_slice[f.node()] )
      {
        lvl = std::max( lvl, slice_level[f.node()] + 1 );
      }
    }
    slice_level[node] = lvl;
    max_level = std::max( max_level, lvl );
  }
  if ( !any )
  {
    throw std::runtime_error( "detect_ppg: no two-input slice found (degenerate circuit)" );
  }

  ppg_verdict verdict;
  verdict.slice_levels = max_level;
  verdict.kind = max_level > 2 ? ppg_kind::booth_radix4 : ppg_kind::simple;
  if ( verdict.kind == ppg_kind::booth_radix4 )
  {
    // the recoder examines overlapping windows of the multiplier operand, so
    // slice parities chain over adjacent input bits; an overlap of one bit in
    // three-bit windows means two encoded bits per digit, i.e. radix 4
    std::vector<uint32_t> pair_degree( g.num_inputs() + 1, 0 );
    bool chained = false;
    for ( uint32_t i = 0; i < g.num_gates(); ++i )
    {
      uint32_t const node = g.gate_node( i );
      if ( !in_slice[node] || slice_level[node] != 2 )
      {
        continue;
      }
      auto const inputs = supp.inputs_of( node );
      if ( inputs.size() == 2 )
      {
        if ( ++pair_degree[inputs[0]] > 1 || ++pair_degree[inputs[1]] > 1 )
        {
          chained = true;
        }
      }
    }
    verdict.radix_estimate = chained ? std::optional<uint32_t>( 4 ) : std::nullopt;
  }
  return verdict;
}

} // namespace reveal
