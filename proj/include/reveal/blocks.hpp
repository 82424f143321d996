#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "aig.hpp"
#include "cuts.hpp"
#include "npn.hpp"

namespace reveal
{

enum class node_function : uint8_t
{
  and_gate,
  ha_member,
  fa_member,
  remaining_xor
};

enum class block_kind : uint8_t
{
  ha,
  fa
};

/*! \brief A validated (sum, carry) pair sharing the same inputs. */
struct recovered_pair
{
  block_kind kind{ block_kind::ha };
  uint32_t sum_root{ 0 };
  uint32_t carry_root{ 0 };
  std::vector<uint32_t> shared_inputs;
  uint8_t input_mask{ 0 }; // complement pattern that maps the pair onto sum/carry form
  bool sum_negated{ false };
  bool carry_negated{ false };
};

/*! \brief Word-level tags per node plus the recovered adder pairs. */
struct block_annotation
{
  std::vector<node_function> function_tag;
  std::vector<bool> xor_root;
  std::vector<bool> maj_root;
  std::vector<recovered_pair> pairs;
  uint32_t ambiguous_pairings{ 0 };

  uint32_t num_nodes() const { return static_cast<uint32_t>( function_tag.size() ); }

  uint32_t count( block_kind kind ) const
  {
    uint32_t n = 0;
    for ( auto const& p : pairs )
    {
      n += p.kind == kind ? 1 : 0;
    }
    return n;
  }
};

namespace detail
{

struct primitive_candidate
{
  uint32_t root;
  cut_primitive primitive;
  std::vector<uint32_t> leaves; // true-support leaves, sorted
  truth_table tt;               // over the reduced leaves
};

/*! \brief Reduce a cut function to its true support and report the kept leaves. */
inline std::optional<primitive_candidate> make_candidate( aig const& g, cut const& c )
{
  if ( c.leaves.size() < 2 || c.leaves.size() > 3 )
  {
    return std::nullopt;
  }
  truth_table const tt = cut_function( g, c );
  // find the true support
  std::vector<uint32_t> kept;
  for ( uint32_t v = 0; v < tt.n; ++v )
  {
    bool depends = false;
    for ( uint32_t x = 0; x < ( 1u << tt.n ) && !depends; ++x )
    {
      if ( ( x >> v ) & 1u )
      {
        continue;
      }
      depends = ( ( tt.bits >> x ) & 1ull ) != ( ( tt.bits >> ( x | ( 1u << v ) ) ) & 1ull );
    }
    if ( depends )
    {
      kept.push_back( v );
    }
  }
  if ( kept.size() < 2 )
  {
    return std::nullopt;
  }
  primitive_candidate cand;
  cand.root = c.root;
  cand.tt.n = static_cast<uint32_t>( kept.size() );
  for ( uint32_t x = 0; x < ( 1u << cand.tt.n ); ++x )
  {
    uint32_t full = 0;
    for ( uint32_t i = 0; i < kept.size(); ++i )
    {
      if ( ( x >> i ) & 1u )
      {
        full |= 1u << kept[i];
      }
    }
    if ( ( tt.bits >> full ) & 1ull )
    {
      cand.tt.bits |= 1ull << x;
    }
  }
  for ( uint32_t v : kept )
  {
    cand.leaves.push_back( c.leaves[v] );
  }
  cand.primitive = classify_cut( cand.tt );
  if ( cand.primitive == cut_primitive::none )
  {
    return std::nullopt;
  }
  return cand;
}

/*! \brief Check sum = parity and carry = majority (or conjunction for the
 * two-input case) under a common input complement pattern and per-output
 * negations.  Every assignment over the shared inputs is examined.
 */
inline std::optional<std::array<uint8_t, 3>> validate_pair( truth_table const& sum,
                                                            truth_table const& carry )
{
  uint32_t const n = sum.n;
  uint32_t const size = 1u << n;
  for ( uint8_t mask = 0; mask < size; ++mask )
  {
    // derive output phases from the all-zeros assignment
    uint32_t const zero = mask; // (x ^ mask) at x = mask is zero
    bool const fs = ( ( sum.bits >> zero ) & 1ull ) != 0;       // parity(0) = 0
    bool const fc = ( ( carry.bits >> zero ) & 1ull ) != 0;     // majority(0) = 0
    bool ok = true;
    for ( uint32_t x = 0; x < size && ok; ++x )
    {
      uint32_t const y = x ^ mask;
      bool const parity = ( __builtin_popcount( y ) & 1 ) != 0;
      bool const major = n == 2 ? ( y == 3u ) : ( __builtin_popcount( y ) >= 2 );
      ok = ( ( ( sum.bits >> x ) & 1ull ) != 0 ) == ( parity != fs ) &&
           ( ( ( carry.bits >> x ) & 1ull ) != 0 ) == ( major != fc );
    }
    if ( ok )
    {
      return std::array<uint8_t, 3>{ mask, static_cast<uint8_t>( fs ), static_cast<uint8_t>( fc ) };
    }
  }
  return std::nullopt;
}

/*! \brief Gates strictly between a root and the given leaves. */
inline void collect_interior( aig const& g, uint32_t root, std::vector<uint32_t> const& leaves,
                              std::vector<uint32_t>& out )
{
  std::vector<uint32_t> stack{ root };
  std::vector<uint32_t> seen;
  while ( !stack.empty() )
  {
    uint32_t const n = stack.back();
    stack.pop_back();
    if ( std::find( leaves.begin(), leaves.end(), n ) != leaves.end() || !g.is_gate( n ) ||
         std::find( seen.begin(), seen.end(), n ) != seen.end() )
    {
      continue;
    }
    seen.push_back( n );
    out.push_back( n );
    stack.push_back( g.gate( n ).fanin0.node() );
    stack.push_back( g.gate( n ).fanin1.node() );
  }
}

} // namespace detail

/*! \brief Recover half adders, full adders and remaining parity roots.
 *
 * Candidates come from 3-feasible cut enumeration and NPN matching against
 * the XOR/MAJ primitives.  Full adders take precedence: an XOR3 and a MAJ3
 * root over the same three inputs form an FA, then XOR2/conjunction pairs
 * over two shared inputs form HAs among the still-unclaimed roots.  Each
 * pair is validated against the canonical sum/carry truth tables before its
 * interior is claimed.
 */
inline block_annotation annotate_blocks( aig const& g, uint32_t cuts_per_node = 16 )
{
  cut_enumerator cuts( g, { 3, cuts_per_node } );

  // gather candidates, grouped by shared leaf set
  std::map<std::vector<uint32_t>, std::vector<detail::primitive_candidate>> xor3_by_leaves,
      maj3_by_leaves, xor2_by_leaves, and2_by_leaves;
  std::vector<std::vector<detail::primitive_candidate>> per_node( g.num_nodes() );
  for ( uint32_t i = 0; i < g.num_gates(); ++i )
  {
    uint32_t const node = g.gate_node( i );
    for ( auto const& c : cuts.cuts_of( node ) )
    {
      auto cand = detail::make_candidate( g, c );
      if ( !cand )
      {
        continue;
      }
      bool duplicate = false;
      for ( auto const& other : per_node[node] )
      {
        duplicate = duplicate || ( other.leaves == cand->leaves && other.primitive == cand->primitive );
      }
      if ( duplicate )
      {
        continue;
      }
      per_node[node].push_back( *cand );
      switch ( cand->primitive )
      {
      case cut_primitive::xor3: xor3_by_leaves[cand->leaves].push_back( *cand ); break;
      case cut_primitive::maj3: maj3_by_leaves[cand->leaves].push_back( *cand ); break;
      case cut_primitive::xor2: xor2_by_leaves[cand->leaves].push_back( *cand ); break;
      case cut_primitive::and2_carry: and2_by_leaves[cand->leaves].push_back( *cand ); break;
      default: break;
      }
    }
  }

  block_annotation ann;
  ann.function_tag.assign( g.num_nodes(), node_function::and_gate );
  ann.xor_root.assign( g.num_nodes(), false );
  ann.maj_root.assign( g.num_nodes(), false );
  std::vector<bool> claimed( g.num_nodes(), false ); // covered by a recovered pair

  std::vector<uint32_t> refs( g.num_nodes(), 0 );
  for ( auto const& gt : g.gates() )
  {
    ++refs[gt.fanin0.node()];
    ++refs[gt.fanin1.node()];
  }
  for ( auto const& o : g.outputs() )
  {
    ++refs[o.node()];
  }

  // a root lying strictly inside the partner's cone is admissible only when
  // it is also consumed outside that cone; otherwise the "pair" is one
  // structure counted twice
  auto usable_inside = [&]( uint32_t root, std::vector<uint32_t> const& host_interior ) {
    uint32_t internal = 0;
    for ( uint32_t n : host_interior )
    {
      if ( n == root )
      {
        continue;
      }
      for ( literal f : { g.gate( n ).fanin0, g.gate( n ).fanin1 } )
      {
        internal += f.node() == root ? 1 : 0;
      }
    }
    return refs[root] > internal;
  };

  auto claim_pair = [&]( detail::primitive_candidate const& sum,
                         detail::primitive_candidate const& carry, block_kind kind,
                         std::array<uint8_t, 3> const& phase ) {
    recovered_pair pair;
    pair.kind = kind;
    pair.sum_root = sum.root;
    pair.carry_root = carry.root;
    pair.shared_inputs = sum.leaves;
    pair.input_mask = phase[0];
    pair.sum_negated = phase[1] != 0;
    pair.carry_negated = phase[2] != 0;
    ann.pairs.push_back( pair );
    std::vector<uint32_t> interior;
    detail::collect_interior( g, sum.root, sum.leaves, interior );
    detail::collect_interior( g, carry.root, carry.leaves, interior );
    node_function const tag =
        kind == block_kind::fa ? node_function::fa_member : node_function::ha_member;
    for ( uint32_t n : interior )
    {
      claimed[n] = true;
      if ( ann.function_tag[n] == node_function::and_gate )
      {
        ann.function_tag[n] = tag;
      }
    }
    ann.xor_root[sum.root] = true;
    ann.maj_root[carry.root] = true;
  };

  // candidates are kept in ascending node-id order, so when several carries
  // match one sum the smallest carry root wins and the surplus is reported
  auto pair_up = [&]( auto const& sums_by_leaves, auto const& carries_by_leaves, block_kind kind ) {
    for ( auto const& [leaves, sums] : sums_by_leaves )
    {
      auto const it = carries_by_leaves.find( leaves );
      if ( it == carries_by_leaves.end() )
      {
        continue;
      }
      for ( auto const& sum : sums )
      {
        if ( claimed[sum.root] )
        {
          continue;
        }
        std::vector<uint32_t> sum_interior;
        detail::collect_interior( g, sum.root, sum.leaves, sum_interior );
        detail::primitive_candidate const* chosen = nullptr;
        std::array<uint8_t, 3> chosen_phase{};
        uint32_t valid = 0;
        for ( auto const& carry : it->second )
        {
          if ( claimed[carry.root] || carry.root == sum.root )
          {
            continue;
          }
          if ( std::find( sum_interior.begin(), sum_interior.end(), carry.root ) !=
                   sum_interior.end() &&
               !usable_inside( carry.root, sum_interior ) )
          {
            continue;
          }
          std::vector<uint32_t> carry_interior;
          detail::collect_interior( g, carry.root, carry.leaves, carry_interior );
          if ( std::find( carry_interior.begin(), carry_interior.end(), sum.root ) !=
                   carry_interior.end() &&
               !usable_inside( sum.root, carry_interior ) )
          {
            continue;
          }
          auto const phase = detail::validate_pair( sum.tt, carry.tt );
          if ( !phase )
          {
            continue;
          }
          if ( ++valid == 1 )
          {
            chosen = &carry;
            chosen_phase = *phase;
          }
        }
        if ( valid > 1 )
        {
          ++ann.ambiguous_pairings;
        }
        if ( chosen )
        {
          claim_pair( sum, *chosen, kind, chosen_phase );
        }
      }
    }
  };
  pair_up( xor3_by_leaves, maj3_by_leaves, block_kind::fa );
  pair_up( xor2_by_leaves, and2_by_leaves, block_kind::ha );

  // unpaired parity roots keep an xor tag; unpaired majority roots are
  // flagged structurally but stay conjunctions in the function one-hot
  for ( uint32_t i = 0; i < g.num_gates(); ++i )
  {
    uint32_t const node = g.gate_node( i );
    for ( auto const& cand : per_node[node] )
    {
      if ( cand.primitive == cut_primitive::xor2 || cand.primitive == cut_primitive::xor3 )
      {
        ann.xor_root[node] = true;
        if ( !claimed[node] )
        {
          ann.function_tag[node] = node_function::remaining_xor;
        }
      }
      else if ( cand.primitive == cut_primitive::maj3 )
      {
        ann.maj_root[node] = true;
      }
    }
  }
  return ann;
}

} // namespace reveal
