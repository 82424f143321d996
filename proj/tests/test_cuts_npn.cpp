#include <catch2/catch_amalgamated.hpp>

#include <reveal/cuts.hpp>
#include <reveal/npn.hpp>
#include <reveal/rng.hpp>

#include <set>

using namespace reveal;

namespace
{

/*! \brief Independent brute-force cut enumeration: every subset of the
 * root's transitive fan-in is tested for the path-blocking property and
 * irredundancy.
 */
std::set<std::vector<uint32_t>> brute_force_cuts( aig const& g, uint32_t root, uint32_t k )
{
  // transitive fan-in
  std::vector<uint32_t> tfi;
  std::vector<bool> seen( g.num_nodes(), false );
  std::vector<uint32_t> stack{ root };
  seen[root] = true;
  while ( !stack.empty() )
  {
    uint32_t const n = stack.back();
    stack.pop_back();
    tfi.push_back( n );
    if ( g.is_gate( n ) )
    {
      for ( literal f : { g.gate( n ).fanin0, g.gate( n ).fanin1 } )
      {
        if ( !seen[f.node()] )
        {
          seen[f.node()] = true;
          stack.push_back( f.node() );
        }
      }
    }
  }
  std::sort( tfi.begin(), tfi.end() );

  auto blocks_all_paths = [&]( std::vector<uint32_t> const& leaves ) {
    // does every PI-to-root path pass through a leaf?  walk down from the
    // root stopping at leaves; reaching a PI or constant means a free path
    if ( std::find( leaves.begin(), leaves.end(), root ) != leaves.end() )
    {
      return true;
    }
    std::vector<uint32_t> work{ root };
    std::vector<bool> visited( g.num_nodes(), false );
    visited[root] = true;
    while ( !work.empty() )
    {
      uint32_t const n = work.back();
      work.pop_back();
      if ( !g.is_gate( n ) )
      {
        return false; // reached an input past the leaves
      }
      for ( literal f : { g.gate( n ).fanin0, g.gate( n ).fanin1 } )
      {
        uint32_t const c = f.node();
        if ( std::find( leaves.begin(), leaves.end(), c ) != leaves.end() || visited[c] )
        {
          continue;
        }
        visited[c] = true;
        work.push_back( c );
      }
    }
    return true;
  };

  std::set<std::vector<uint32_t>> cuts;
  uint32_t const m = static_cast<uint32_t>( tfi.size() );
  for ( uint32_t mask = 1; mask < ( 1u << m ); ++mask )
  {
    if ( static_cast<uint32_t>( __builtin_popcount( mask ) ) > k )
    {
      continue;
    }
    std::vector<uint32_t> leaves;
    for ( uint32_t i = 0; i < m; ++i )
    {
      if ( ( mask >> i ) & 1u )
      {
        leaves.push_back( tfi[i] );
      }
    }
    if ( !blocks_all_paths( leaves ) )
    {
      continue;
    }
    // irredundancy: no proper subset is a cut
    bool irredundant = true;
    for ( uint32_t sub = ( mask - 1 ) & mask; sub && irredundant; sub = ( sub - 1 ) & mask )
    {
      std::vector<uint32_t> subset;
      for ( uint32_t i = 0; i < m; ++i )
      {
        if ( ( sub >> i ) & 1u )
        {
          subset.push_back( tfi[i] );
        }
      }
      if ( blocks_all_paths( subset ) )
      {
        irredundant = false;
      }
    }
    if ( irredundant )
    {
      cuts.insert( leaves );
    }
  }
  return cuts;
}

aig xor3_chain( literal* out_inputs = nullptr )
{
  aig_builder b;
  literal const x = b.add_input();
  literal const y = b.add_input();
  literal const z = b.add_input();
  literal const t = b.add_xor( x, y );
  literal const s = b.add_xor( t, z );
  b.add_output( s );
  if ( out_inputs )
  {
    out_inputs[0] = x;
    out_inputs[1] = y;
    out_inputs[2] = z;
  }
  return b.build();
}

} // namespace

TEST_CASE( "cut set of an input is the trivial cut" )
{
  aig_builder b;
  literal const x = b.add_input();
  b.add_input();
  b.add_output( x );
  aig const g = b.build();
  auto const cuts = enumerate_cuts( g, x.node(), 4 );
  REQUIRE( cuts.size() == 1u );
  CHECK( cuts[0].leaves == std::vector<uint32_t>{ x.node() } );
}

TEST_CASE( "cut set of a single and gate" )
{
  aig_builder b;
  literal const x = b.add_input();
  literal const y = b.add_input();
  literal const g1 = b.add_and( x, y );
  b.add_output( g1 );
  aig const g = b.build();
  auto const cuts = enumerate_cuts( g, g1.node(), 2 );
  REQUIRE( cuts.size() == 2u );
  CHECK( cuts[0].leaves == std::vector<uint32_t>{ g1.node() } );
  CHECK( cuts[1].leaves == ( std::vector<uint32_t>{ x.node(), y.node() } ) );
}

TEST_CASE( "enumerated cuts match brute force on a three-input xor chain" )
{
  aig const g = xor3_chain();
  uint32_t const root = g.output( 0 ).node();
  auto const expected = brute_force_cuts( g, root, 3 );
  auto const got = enumerate_cuts( g, root, 3, 64 );
  std::set<std::vector<uint32_t>> got_set;
  for ( auto const& c : got )
  {
    got_set.insert( c.leaves );
  }
  CHECK( got_set == expected );
  CHECK( got_set.count( { 1, 2, 3 } ) == 1u ); // contains the PI cut
}

TEST_CASE( "cut functions of basic structures" )
{
  aig_builder b;
  literal const x = b.add_input();
  literal const y = b.add_input();
  literal const g1 = b.add_and( x, y );
  b.add_output( g1 );
  aig const g = b.build();
  cut const c{ g1.node(), { x.node(), y.node() } };
  CHECK( cut_function( g, c ) == truth_table{ 2, 0x8 } );
}

TEST_CASE( "xor3 and maj3 truth tables" )
{
  aig const g = xor3_chain();
  cut const c{ g.output( 0 ).node(), { 1, 2, 3 } };
  CHECK( cut_function( g, c ) == truth_table{ 3, 0x96 } );

  // positive-root majority: (a | b) & (a | c) & (b | c)
  aig_builder b;
  literal const x = b.add_input();
  literal const y = b.add_input();
  literal const z = b.add_input();
  literal const maj =
      b.add_and( b.add_and( b.add_or( x, y ), b.add_or( x, z ) ), b.add_or( y, z ) );
  b.add_output( maj );
  aig const m = b.build();
  cut const cm{ maj.node(), { 1, 2, 3 } };
  CHECK( cut_function( m, cm ) == truth_table{ 3, 0xe8 } );

  // the sum-of-products form computes the complement on its root node
  aig_builder b2;
  literal const x2 = b2.add_input();
  literal const y2 = b2.add_input();
  literal const z2 = b2.add_input();
  literal const maj2 =
      b2.add_or( b2.add_or( b2.add_and( x2, y2 ), b2.add_and( x2, z2 ) ), b2.add_and( y2, z2 ) );
  b2.add_output( maj2 );
  aig const m2 = b2.build();
  REQUIRE( maj2.complemented() );
  CHECK( cut_function( m2, cut{ maj2.node(), { 1, 2, 3 } } ) == truth_table{ 3, 0x17 } );
}

TEST_CASE( "cut_function rejects non-cuts" )
{
  aig const g = xor3_chain();
  cut const bad{ g.output( 0 ).node(), { 1, 2 } }; // z can still reach the root
  CHECK_THROWS_AS( cut_function( g, bad ), std::invalid_argument );
}

TEST_CASE( "npn canonical form identifies equivalent functions" )
{
  // complementing one input of xor3 keeps the class
  CHECK( npn_canonical( { 3, 0x96 } ).canonical == npn_canonical( { 3, 0x69 } ).canonical );
  // and2 and or2 are npn equivalent
  CHECK( npn_canonical( { 2, 0x8 } ).canonical == npn_canonical( { 2, 0xe } ).canonical );
  // xor2 and and2 are not
  CHECK( !( npn_canonical( { 2, 0x6 } ).canonical == npn_canonical( { 2, 0x8 } ).canonical ) );
}

TEST_CASE( "npn canonicalization is closed over all 256 three-input functions" )
{
  rng gen( 11 );
  for ( uint32_t f = 0; f < 256; ++f )
  {
    truth_table const tt{ 3, f };
    auto const canon = npn_canonical( tt ).canonical;
    // apply a random transform first; the canonical form must not move
    npn_transform t;
    std::array<uint8_t, 4> perm{ 0, 1, 2, 3 };
    for ( uint32_t i = 2; i > 0; --i )
    {
      std::swap( perm[i], perm[gen.next_below( i + 1 )] );
    }
    t.perm = perm;
    t.input_mask = static_cast<uint8_t>( gen.next_below( 8 ) );
    t.output_negated = gen.next_bool();
    auto const moved = apply_npn( tt, t );
    CHECK( npn_canonical( moved ).canonical == canon );
  }
}

TEST_CASE( "classify_cut recognizes the arithmetic primitives" )
{
  CHECK( classify_cut( { 3, 0x96 } ) == cut_primitive::xor3 );
  CHECK( classify_cut( { 3, 0xe8 } ) == cut_primitive::maj3 );
  CHECK( classify_cut( { 3, 0xca } ) == cut_primitive::none ); // 2:1 mux
  CHECK( classify_cut( { 2, 0x6 } ) == cut_primitive::xor2 );
  CHECK( classify_cut( { 2, 0x9 } ) == cut_primitive::xor2 ); // xnor
  CHECK( classify_cut( { 2, 0x8 } ) == cut_primitive::and2_carry );
  CHECK( classify_cut( { 2, 0xe } ) == cut_primitive::and2_carry ); // or = npn and
  // degenerate three-leaf parity of two variables reduces to xor2
  CHECK( classify_cut( { 3, 0x66 } ) == cut_primitive::xor2 );
}

TEST_CASE( "classification is invariant under npn transforms" )
{
  rng gen( 23 );
  for ( uint32_t f = 0; f < 256; ++f )
  {
    truth_table const tt{ 3, f };
    auto const cls = classify_cut( tt );
    npn_transform t;
    std::array<uint8_t, 4> perm{ 0, 1, 2, 3 };
    for ( uint32_t i = 2; i > 0; --i )
    {
      std::swap( perm[i], perm[gen.next_below( i + 1 )] );
    }
    t.perm = perm;
    t.input_mask = static_cast<uint8_t>( gen.next_below( 8 ) );
    t.output_negated = gen.next_bool();
    CHECK( classify_cut( apply_npn( tt, t ) ) == cls );
  }
}
