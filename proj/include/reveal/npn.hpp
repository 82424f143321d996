#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>

#include "cuts.hpp"

namespace reveal
{

/*! \brief Input permutation, input complement mask and output complement. */
struct npn_transform
{
  std::array<uint8_t, 4> perm{ 0, 1, 2, 3 };
  uint8_t input_mask{ 0 };
  bool output_negated{ false };
};

/*! \brief Apply a transform: result(x) = f(perm(x) ^ mask) ^ out. */
inline truth_table apply_npn( truth_table const& tt, npn_transform const& t )
{
  truth_table out;
  out.n = tt.n;
  uint32_t const size = 1u << tt.n;
  for ( uint32_t x = 0; x < size; ++x )
  {
    uint32_t y = 0;
    for ( uint32_t v = 0; v < tt.n; ++v )
    {
      if ( ( x >> v ) & 1u )
      {
        y |= 1u << t.perm[v];
      }
    }
    y ^= t.input_mask & ( size - 1 );
    bool const bit = ( ( tt.bits >> y ) & 1ull ) != 0;
    if ( bit != t.output_negated )
    {
      out.bits |= 1ull << x;
    }
  }
  return out;
}

struct npn_result
{
  truth_table canonical;
  npn_transform transform; // a transform mapping the input function to the canonical one
};

/*! \brief Exhaustive NPN canonical form for up to four inputs: the minimum
 * truth-table value over all input negations, input permutations and
 * output negation.
 */
inline npn_result npn_canonical( truth_table const& tt )
{
  if ( tt.n > 4 )
  {
    throw std::invalid_argument( "npn_canonical: only up to four inputs are supported" );
  }
  std::array<uint8_t, 4> const ident{ 0, 1, 2, 3 };
  npn_result best;
  best.canonical.n = tt.n;
  best.canonical.bits = ~0ull & tt.mask();
  bool first = true;
  std::array<uint8_t, 4> p = ident;
  // iterate over permutations of the first n positions
  std::sort( p.begin(), p.begin() + tt.n );
  do
  {
    for ( uint32_t mask = 0; mask < ( 1u << tt.n ); ++mask )
    {
      for ( bool out : { false, true } )
      {
        npn_transform t;
        t.perm = ident;
        for ( uint32_t v = 0; v < tt.n; ++v )
        {
          t.perm[v] = p[v];
        }
        t.input_mask = static_cast<uint8_t>( mask );
        t.output_negated = out;
        truth_table const candidate = apply_npn( tt, t );
        if ( first || candidate.bits < best.canonical.bits )
        {
          first = false;
          best.canonical = candidate;
          best.transform = t;
        }
      }
    }
  } while ( std::next_permutation( p.begin(), p.begin() + tt.n ) );
  return best;
}

enum class cut_primitive
{
  none,
  xor2,
  xor3,
  and2_carry, // two-input majority, i.e. the half-adder carry
  maj3
};

inline char const* primitive_name( cut_primitive p )
{
  switch ( p )
  {
  case cut_primitive::xor2: return "XOR2";
  case cut_primitive::xor3: return "XOR3";
  case cut_primitive::and2_carry: return "AND2";
  case cut_primitive::maj3: return "MAJ3";
  default: return "None";
  }
}

/*! \brief Reduce to the true support (drop vacuous inputs). */
inline truth_table tt_shrink_support( truth_table tt )
{
  for ( uint32_t v = 0; v < tt.n; )
  {
    bool depends = false;
    uint32_t const size = 1u << tt.n;
    for ( uint32_t x = 0; x < size && !depends; ++x )
    {
      if ( ( x >> v ) & 1u )
      {
        continue;
      }
      bool const f0 = ( tt.bits >> x ) & 1ull;
      bool const f1 = ( tt.bits >> ( x | ( 1u << v ) ) ) & 1ull;
      depends = f0 != f1;
    }
    if ( depends )
    {
      ++v;
      continue;
    }
    // remove variable v
    truth_table smaller;
    smaller.n = tt.n - 1;
    uint32_t const size2 = 1u << smaller.n;
    for ( uint32_t x = 0; x < size2; ++x )
    {
      uint32_t const low = x & ( ( 1u << v ) - 1 );
      uint32_t const high = ( x >> v ) << ( v + 1 );
      if ( ( tt.bits >> ( high | low ) ) & 1ull )
      {
        smaller.bits |= 1ull << x;
      }
    }
    tt = smaller;
  }
  return tt;
}

/*! \brief Match against the NPN classes of the arithmetic primitives.
 *
 * Functions with vacuous inputs are reduced to their true support first, so
 * a three-leaf cut computing a two-input parity still reports XOR2.
 */
inline cut_primitive classify_cut( truth_table const& tt )
{
  if ( tt.n < 2 || tt.n > 3 )
  {
    return cut_primitive::none;
  }
  truth_table const reduced = tt_shrink_support( tt );
  if ( reduced.n == 2 )
  {
    uint64_t const canon = npn_canonical( reduced ).canonical.bits;
    static uint64_t const xor2_canon = npn_canonical( { 2, 0x6 } ).canonical.bits;
    static uint64_t const and2_canon = npn_canonical( { 2, 0x8 } ).canonical.bits;
    if ( canon == xor2_canon )
    {
      return cut_primitive::xor2;
    }
    if ( canon == and2_canon )
    {
      return cut_primitive::and2_carry;
    }
    return cut_primitive::none;
  }
  if ( reduced.n == 3 )
  {
    uint64_t const canon = npn_canonical( reduced ).canonical.bits;
    static uint64_t const xor3_canon = npn_canonical( { 3, 0x96 } ).canonical.bits;
    static uint64_t const maj3_canon = npn_canonical( { 3, 0xe8 } ).canonical.bits;
    if ( canon == xor3_canon )
    {
      return cut_primitive::xor3;
    }
    if ( canon == maj3_canon )
    {
      return cut_primitive::maj3;
    }
  }
  return cut_primitive::none;
}

} // namespace reveal
