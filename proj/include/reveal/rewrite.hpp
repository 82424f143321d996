#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <stdexcept>
#include <vector>

#include "aig.hpp"
#include "cuts.hpp"
#include "npn.hpp"
#include "rng.hpp"
#include "simulate.hpp"

namespace reveal
{

enum class rewrite_pass : uint8_t
{
  strash,
  const_prop,
  double_neg_elim,
  cut_rewrite,
  balance
};

/*! \brief Pass schedule for the optimization stand-in; the seed picks among
 * equal-cost implementation variants, so it fully determines the run.
 */
struct rewrite_config
{
  std::vector<rewrite_pass> passes{ rewrite_pass::strash, rewrite_pass::const_prop,
                                    rewrite_pass::double_neg_elim, rewrite_pass::cut_rewrite,
                                    rewrite_pass::balance };
  uint32_t rounds{ 1 };
  uint64_t seed{ 1 };

  static rewrite_config dc2like( uint64_t seed = 1 )
  {
    rewrite_config c;
    c.rounds = 2;
    c.seed = seed;
    return c;
  }

  static rewrite_config resyn3like( uint64_t seed = 1 )
  {
    rewrite_config c;
    c.passes = { rewrite_pass::strash, rewrite_pass::balance, rewrite_pass::cut_rewrite,
                 rewrite_pass::const_prop, rewrite_pass::cut_rewrite, rewrite_pass::balance };
    c.rounds = 3;
    c.seed = seed;
    return c;
  }
};

namespace detail
{

inline std::vector<uint32_t> fanout_counts( aig const& g )
{
  std::vector<uint32_t> ref( g.num_nodes(), 0 );
  for ( auto const& gt : g.gates() )
  {
    ++ref[gt.fanin0.node()];
    ++ref[gt.fanin1.node()];
  }
  for ( auto const& o : g.outputs() )
  {
    ++ref[o.node()];
  }
  return ref;
}

/*! \brief Small implementation database: one scratch AIG per NPN class,
 * synthesized from the truth table via the cheaper of a factored
 * sum-of-products (either polarity) and recursive cofactoring.
 */
class impl_database
{
public:
  explicit impl_database( uint64_t seed = 1 ) : gen_( seed ) {}

  /*! \brief Implementation of the class representative, inputs = tt vars. */
  aig const& implementation_of( truth_table const& canonical )
  {
    uint64_t const key = ( static_cast<uint64_t>( canonical.n ) << 60 ) |
                         ( canonical.bits & canonical.mask() );
    auto it = cache_.find( key );
    if ( it == cache_.end() )
    {
      it = cache_.emplace( key, synthesize( canonical, gen_ ) ).first;
    }
    return it->second;
  }

private:
  static std::vector<uint32_t> isop_cubes( truth_table const& tt )
  {
    // cube encoding: 2 bits per variable (01 = positive, 10 = negative, 00 = absent)
    std::vector<uint32_t> cubes;
    uint32_t const size = 1u << tt.n;
    uint64_t remaining = tt.bits & tt.mask();
    while ( remaining )
    {
      uint32_t const minterm = static_cast<uint32_t>( __builtin_ctzll( remaining ) );
      // expand the minterm into a prime-ish cube greedily
      uint32_t cube = 0;
      for ( uint32_t v = 0; v < tt.n; ++v )
      {
        cube |= 1u << ( 2 * v + ( ( ( minterm >> v ) & 1u ) ? 0 : 1 ) );
      }
      for ( uint32_t v = 0; v < tt.n; ++v )
      {
        uint32_t const without = cube & ~( 3u << ( 2 * v ) );
        bool inside = true;
        for ( uint32_t x = 0; x < size && inside; ++x )
        {
          bool member = true;
          for ( uint32_t u = 0; u < tt.n && member; ++u )
          {
            uint32_t const spec = ( without >> ( 2 * u ) ) & 3u;
            if ( spec == 1u && !( ( x >> u ) & 1u ) )
            {
              member = false;
            }
            if ( spec == 2u && ( ( x >> u ) & 1u ) )
            {
              member = false;
            }
          }
          if ( member && !( ( tt.bits >> x ) & 1ull ) )
          {
            inside = false;
          }
        }
        if ( inside )
        {
          cube = without;
        }
      }
      // remove covered minterms
      for ( uint32_t x = 0; x < size; ++x )
      {
        bool member = true;
        for ( uint32_t u = 0; u < tt.n && member; ++u )
        {
          uint32_t const spec = ( cube >> ( 2 * u ) ) & 3u;
          if ( spec == 1u && !( ( x >> u ) & 1u ) )
          {
            member = false;
          }
          if ( spec == 2u && ( ( x >> u ) & 1u ) )
          {
            member = false;
          }
        }
        if ( member )
        {
          remaining &= ~( 1ull << x );
        }
      }
      cubes.push_back( cube );
    }
    return cubes;
  }

  static literal build_sop( aig_builder& b, std::vector<literal> const& ins,
                            std::vector<uint32_t> const& cubes, uint32_t n )
  {
    std::vector<literal> products;
    for ( uint32_t cube : cubes )
    {
      literal p = b.constant( true );
      for ( uint32_t v = 0; v < n; ++v )
      {
        uint32_t const spec = ( cube >> ( 2 * v ) ) & 3u;
        if ( spec == 1u )
        {
          p = b.add_and( p, ins[v] );
        }
        else if ( spec == 2u )
        {
          p = b.add_and( p, !ins[v] );
        }
      }
      products.push_back( p );
    }
    if ( products.empty() )
    {
      return b.constant( false );
    }
    while ( products.size() > 1 )
    {
      std::vector<literal> next;
      for ( size_t i = 0; i + 1 < products.size(); i += 2 )
      {
        next.push_back( b.add_or( products[i], products[i + 1] ) );
      }
      if ( products.size() & 1 )
      {
        next.push_back( products.back() );
      }
      products = next;
    }
    return products[0];
  }

  static literal build_shannon( aig_builder& b, std::vector<literal> const& ins, truth_table tt,
                                std::map<uint64_t, literal>& memo )
  {
    tt.bits &= tt.mask();
    uint64_t const key = ( static_cast<uint64_t>( tt.n ) << 60 ) | tt.bits;
    if ( auto it = memo.find( key ); it != memo.end() )
    {
      return it->second;
    }
    if ( tt.bits == 0 )
    {
      return b.constant( false );
    }
    if ( tt.bits == tt.mask() )
    {
      return b.constant( true );
    }
    // single-variable cases
    for ( uint32_t v = 0; v < tt.n; ++v )
    {
      uint64_t const var = tt_var( v, tt.n ) & tt.mask();
      if ( tt.bits == var )
      {
        return ins[v];
      }
      if ( tt.bits == ( ~var & tt.mask() ) )
      {
        return !ins[v];
      }
    }
    // split on the last variable (keeps cofactor tables compact)
    uint32_t const v = tt.n - 1;
    uint64_t const var = tt_var( v, tt.n ) & tt.mask();
    truth_table f1{ tt.n, tt.bits & var };
    truth_table f0{ tt.n, tt.bits & ~var };
    // normalize cofactors onto n-1 variables
    truth_table c1{ tt.n - 1, 0 }, c0{ tt.n - 1, 0 };
    uint32_t const half = 1u << ( tt.n - 1 );
    for ( uint32_t x = 0; x < half; ++x )
    {
      if ( ( f1.bits >> ( x | half ) ) & 1ull )
      {
        c1.bits |= 1ull << x;
      }
      if ( ( f0.bits >> x ) & 1ull )
      {
        c0.bits |= 1ull << x;
      }
    }
    literal result;
    if ( ( c1.bits & c1.mask() ) == ( ~c0.bits & c0.mask() ) )
    {
      literal const low = build_shannon( b, ins, c0, memo );
      result = b.add_xor( ins[v], low );
    }
    else if ( ( c0.bits & ~c1.bits & c0.mask() ) == 0 )
    {
      // low implies high: x ? h : l  =  (x & h) | l
      literal const high = build_shannon( b, ins, c1, memo );
      literal const low = build_shannon( b, ins, c0, memo );
      result = b.add_or( b.add_and( ins[v], high ), low );
    }
    else if ( ( c1.bits & ~c0.bits & c1.mask() ) == 0 )
    {
      // high implies low: x ? h : l  =  (~x & l) | h
      literal const high = build_shannon( b, ins, c1, memo );
      literal const low = build_shannon( b, ins, c0, memo );
      result = b.add_or( b.add_and( !ins[v], low ), high );
    }
    else
    {
      literal const high = build_shannon( b, ins, c1, memo );
      literal const low = build_shannon( b, ins, c0, memo );
      result = b.add_mux( ins[v], high, low );
    }
    memo.emplace( key, result );
    return result;
  }

  static aig synthesize( truth_table const& tt, rng& gen )
  {
    aig best;
    bool have_best = false;
    // equal-cost candidates are picked by seed, so different obfuscation
    // seeds produce structurally different circuits
    auto consider = [&]( aig candidate ) {
      if ( !have_best || candidate.num_gates() < best.num_gates() ||
           ( candidate.num_gates() == best.num_gates() && gen.next_bool() ) )
      {
        best = std::move( candidate );
        have_best = true;
      }
    };

    {
      aig_builder b( tt.n );
      std::vector<literal> ins;
      for ( uint32_t v = 0; v < tt.n; ++v )
      {
        ins.push_back( literal( v + 1, false ) );
      }
      b.add_output( build_sop( b, ins, isop_cubes( tt ), tt.n ) );
      consider( cleanup( b.build() ) );
    }
    {
      truth_table negated{ tt.n, ~tt.bits & tt.mask() };
      aig_builder b( tt.n );
      std::vector<literal> ins;
      for ( uint32_t v = 0; v < tt.n; ++v )
      {
        ins.push_back( literal( v + 1, false ) );
      }
      b.add_output( !build_sop( b, ins, isop_cubes( negated ), tt.n ) );
      consider( cleanup( b.build() ) );
    }
    {
      aig_builder b( tt.n );
      std::vector<literal> ins;
      for ( uint32_t v = 0; v < tt.n; ++v )
      {
        ins.push_back( literal( v + 1, false ) );
      }
      std::map<uint64_t, literal> memo;
      b.add_output( build_shannon( b, ins, tt, memo ) );
      consider( cleanup( b.build() ) );
    }
    return best;
  }

  rng gen_;
  std::map<uint64_t, aig> cache_;
};

/*! \brief Copy `impl` (a scratch AIG over leaf variables) into `b`. */
inline literal instantiate( aig_builder& b, aig const& impl, std::vector<literal> const& leaf_lits )
{
  std::vector<literal> map( impl.num_nodes() );
  map[0] = b.constant( false );
  for ( uint32_t i = 0; i < impl.num_inputs(); ++i )
  {
    map[i + 1] = leaf_lits[i];
  }
  for ( uint32_t i = 0; i < impl.num_gates(); ++i )
  {
    auto const& gt = impl.gates()[i];
    map[impl.gate_node( i )] = b.add_and( map[gt.fanin0.node()] ^ gt.fanin0.complemented(),
                                          map[gt.fanin1.node()] ^ gt.fanin1.complemented() );
  }
  literal const out = impl.output( 0 );
  return map[out.node()] ^ out.complemented();
}

/*! \brief Gates that die with `root` when everything down to `leaves` is removed. */
inline uint32_t mffc_size( aig const& g, uint32_t root, std::vector<uint32_t> const& leaves,
                           std::vector<uint32_t>& ref )
{
  std::vector<uint32_t> dereffed;
  std::function<uint32_t( uint32_t )> deref = [&]( uint32_t node ) -> uint32_t {
    uint32_t count = 1;
    for ( literal f : { g.gate( node ).fanin0, g.gate( node ).fanin1 } )
    {
      uint32_t const child = f.node();
      if ( !g.is_gate( child ) ||
           std::find( leaves.begin(), leaves.end(), child ) != leaves.end() )
      {
        continue;
      }
      dereffed.push_back( child );
      if ( --ref[child] == 0 )
      {
        count += deref( child );
      }
    }
    return count;
  };
  uint32_t const size = deref( root );
  for ( uint32_t node : dereffed )
  {
    ++ref[node];
  }
  return size;
}

struct chosen_rewrite
{
  std::vector<uint32_t> leaves;
  aig const* impl;          // class representative implementation
  npn_transform transform;  // maps the cut function onto the representative
};

/*! \brief One DAG-aware rewriting sweep over 3- and 4-leaf cuts.
 *
 * A cut is replaced only when the replacement is strictly smaller than the
 * gates the cut's cone exclusively owns (no sharing credit is assumed, so
 * accepted rewrites can only shrink the network).
 */
inline aig cut_rewrite_pass( aig const& g, impl_database& db, rng& gen )
{
  cut_enumerator cuts( g, { 4, 16 } );
  std::vector<uint32_t> ref = fanout_counts( g );
  std::vector<chosen_rewrite> chosen( g.num_nodes() );
  std::vector<bool> has_choice( g.num_nodes(), false );

  for ( uint32_t gi = 0; gi < g.num_gates(); ++gi )
  {
    uint32_t const node = g.gate_node( gi );
    int best_gain = 0;
    bool best_set = false;
    for ( auto const& c : cuts.cuts_of( node ) )
    {
      // rewrite only 3- and 4-leaf cuts; smaller cones have nothing to restructure
      if ( c.leaves.size() < 3 )
      {
        continue;
      }
      truth_table const tt = cut_function( g, c );
      npn_result const canon = npn_canonical( tt );
      aig const& impl = db.implementation_of( canon.canonical );
      uint32_t const mffc = mffc_size( g, node, c.leaves, ref );
      int const gain = static_cast<int>( mffc ) - static_cast<int>( impl.num_gates() );
      if ( gain < 0 )
      {
        continue;
      }
      if ( gain == 0 && !gen.next_bool() )
      {
        continue; // zero-gain restructuring is taken with seeded probability
      }
      if ( !best_set || gain > best_gain || ( gain == best_gain && gen.next_bool() ) )
      {
        best_set = true;
        best_gain = gain;
        chosen[node] = { c.leaves, &impl, canon.transform };
        has_choice[node] = true;
      }
    }
  }

  // lazy rebuild honoring the chosen rewrites
  aig_builder b( g.num_inputs() );
  std::vector<literal> map( g.num_nodes() );
  std::vector<bool> built( g.num_nodes(), false );
  map[0] = b.constant( false );
  built[0] = true;
  for ( uint32_t i = 1; i <= g.num_inputs(); ++i )
  {
    map[i] = literal( i, false );
    built[i] = true;
  }
  std::function<literal( uint32_t )> build_node = [&]( uint32_t node ) -> literal {
    if ( built[node] )
    {
      return map[node];
    }
    literal result;
    if ( has_choice[node] )
    {
      auto const& cr = chosen[node];
      uint32_t const n = static_cast<uint32_t>( cr.leaves.size() );
      std::vector<literal> leaf_lits( n );
      for ( uint32_t i = 0; i < n; ++i )
      {
        leaf_lits[i] = build_node( cr.leaves[i] );
      }
      // the transform maps the cut function onto the representative:
      // canonical(x) = f(P(x) ^ m) ^ o, so representative input v reads
      // leaf perm[v] complemented by the matching mask bit
      std::vector<literal> rep_inputs( n );
      for ( uint32_t v = 0; v < n; ++v )
      {
        uint32_t const leaf = cr.transform.perm[v];
        rep_inputs[v] = leaf_lits[leaf] ^ ( ( ( cr.transform.input_mask >> leaf ) & 1u ) != 0 );
      }
      result = instantiate( b, *cr.impl, rep_inputs ) ^ cr.transform.output_negated;
    }
    else
    {
      auto const& gt = g.gate( node );
      literal const f0 = build_node( gt.fanin0.node() ) ^ gt.fanin0.complemented();
      literal const f1 = build_node( gt.fanin1.node() ) ^ gt.fanin1.complemented();
      result = b.add_and( f0, f1 );
    }
    map[node] = result;
    built[node] = true;
    return result;
  };
  for ( uint32_t i = 0; i < g.num_outputs(); ++i )
  {
    literal const o = g.output( i );
    b.add_output( build_node( o.node() ) ^ o.complemented() );
  }
  return b.build();
}

/*! \brief Depth-oriented restructuring of conjunction trees.
 *
 * Maximal and-trees collected through plain edges into single-fanout gates
 * are rebuilt bottom-up by level; fanout boundaries are never duplicated.
 */
inline aig balance_pass( aig const& g )
{
  std::vector<uint32_t> const ref = fanout_counts( g );
  aig_builder b( g.num_inputs() );
  std::vector<literal> map( g.num_nodes() );
  std::vector<bool> built( g.num_nodes(), false );
  std::vector<uint32_t> level_of( 1, 0 ); // per new node (grow lazily)
  map[0] = b.constant( false );
  built[0] = true;
  for ( uint32_t i = 1; i <= g.num_inputs(); ++i )
  {
    map[i] = literal( i, false );
    built[i] = true;
  }
  auto new_level = [&]( literal l ) -> uint32_t {
    return l.node() < level_of.size() ? level_of[l.node()] : 0u;
  };
  auto record_level = [&]( literal l, uint32_t lvl ) {
    if ( l.node() >= level_of.size() )
    {
      level_of.resize( l.node() + 1, 0 );
    }
    level_of[l.node()] = std::max( level_of[l.node()], lvl );
  };

  std::function<literal( uint32_t )> build_node = [&]( uint32_t node ) -> literal {
    if ( built[node] )
    {
      return map[node];
    }
    // collect the maximal conjunction rooted here
    std::vector<literal> leaves;
    std::vector<literal> frontier;
    std::function<void( uint32_t )> collect = [&]( uint32_t n ) {
      for ( literal f : { g.gate( n ).fanin0, g.gate( n ).fanin1 } )
      {
        if ( !f.complemented() && g.is_gate( f.node() ) && ref[f.node()] == 1 )
        {
          collect( f.node() );
        }
        else
        {
          frontier.push_back( f );
        }
      }
    };
    collect( node );
    for ( literal f : frontier )
    {
      leaves.push_back( build_node( f.node() ) ^ f.complemented() );
    }
    // combine the two lowest-level operands first
    auto cmp = [&]( literal a, literal c ) {
      return new_level( a ) != new_level( c ) ? new_level( a ) > new_level( c )
                                              : a.code() > c.code();
    };
    std::priority_queue<literal, std::vector<literal>, decltype( cmp )> queue( cmp );
    for ( literal l : leaves )
    {
      queue.push( l );
    }
    literal result = b.constant( true );
    if ( !queue.empty() )
    {
      while ( queue.size() > 1 )
      {
        literal const a = queue.top();
        queue.pop();
        literal const c = queue.top();
        queue.pop();
        literal const r = b.add_and( a, c );
        record_level( r, std::max( new_level( a ), new_level( c ) ) + 1 );
        queue.push( r );
      }
      result = queue.top();
    }
    map[node] = result;
    built[node] = true;
    return result;
  };
  for ( uint32_t i = 0; i < g.num_outputs(); ++i )
  {
    literal const o = g.output( i );
    b.add_output( build_node( o.node() ) ^ o.complemented() );
  }
  return b.build();
}

} // namespace detail

/*! \brief Functionality-preserving restructuring (the synthesis stand-in).
 *
 * Applies the configured pass sequence for the configured number of rounds
 * and guards the result with a 10^4-vector random equivalence check; a guard
 * failure aborts rather than emitting a wrong circuit.
 */
inline aig optimize( aig const& g, rewrite_config const& config = {} )
{
  detail::impl_database db( config.seed );
  rng gen( config.seed * 0x9e3779b97f4a7c15ull + 1 );
  aig current = g;
  for ( uint32_t round = 0; round < config.rounds; ++round )
  {
    for ( auto pass : config.passes )
    {
      switch ( pass )
      {
      case rewrite_pass::strash:
      case rewrite_pass::const_prop:
      case rewrite_pass::double_neg_elim:
        // one hashed rebuild implements all three local rule sets
        current = cleanup( strash( current ) );
        break;
      case rewrite_pass::cut_rewrite:
        current = detail::cut_rewrite_pass( current, db, gen );
        break;
      case rewrite_pass::balance:
        current = detail::balance_pass( current );
        break;
      }
    }
  }
  if ( !random_sim_equal( g, current, 10000, 0x9d5ull ^ config.seed ) )
  {
    throw std::runtime_error( "optimize: internal equivalence guard failed" );
  }
  return current;
}

struct bug_injection
{
  aig circuit;
  std::vector<bool> witness; // one value per primary input
};

/*! \brief Rewire one fanin of three internal nodes to random earlier nodes,
 * resampling until random simulation exposes an output mismatch.  The
 * returned witness replays the mismatch.  Bounded at 1000 rewirings times
 * 4096 vectors.
 */
inline bug_injection inject_bug( aig const& g, uint64_t seed )
{
  if ( g.num_gates() < 3 )
  {
    throw std::invalid_argument( "inject_bug: need at least three internal nodes" );
  }
  rng gen( seed );
  for ( uint32_t attempt = 0; attempt < 1000; ++attempt )
  {
    std::vector<and_gate> gates = g.gates();
    std::vector<uint32_t> picked;
    while ( picked.size() < 3 )
    {
      uint32_t const idx = static_cast<uint32_t>( gen.next_below( gates.size() ) );
      if ( std::find( picked.begin(), picked.end(), idx ) == picked.end() )
      {
        picked.push_back( idx );
      }
    }
    for ( uint32_t idx : picked )
    {
      uint32_t const node = g.gate_node( idx );
      literal replacement;
      do
      {
        replacement = literal( static_cast<uint32_t>( gen.next_below( node ) ), gen.next_bool() );
      } while ( replacement == gates[idx].fanin0 || replacement == gates[idx].fanin1 );
      if ( gen.next_bool() )
      {
        gates[idx].fanin0 = replacement;
      }
      else
      {
        gates[idx].fanin1 = replacement;
      }
    }
    aig buggy( g.num_inputs(), std::move( gates ), g.outputs(), g.input_names(), g.output_names() );

    simulator orig( g ), mod( buggy );
    std::vector<uint64_t> words( g.num_inputs() );
    for ( uint32_t batch = 0; batch < 64; ++batch ) // 64 * 64 = 4096 vectors
    {
      for ( auto& w : words )
      {
        w = gen.next_u64();
      }
      orig.eval( words );
      mod.eval( words );
      for ( uint32_t o = 0; o < g.num_outputs(); ++o )
      {
        uint64_t const diff = orig.output_word( o ) ^ mod.output_word( o );
        if ( diff )
        {
          uint32_t const lane = static_cast<uint32_t>( __builtin_ctzll( diff ) );
          std::vector<bool> witness( g.num_inputs() );
          for ( uint32_t i = 0; i < g.num_inputs(); ++i )
          {
            witness[i] = ( words[i] >> lane ) & 1ull;
          }
          return { std::move( buggy ), std::move( witness ) };
        }
      }
    }
  }
  throw std::runtime_error( "inject_bug: no observable mismatch within the resample budget" );
}

} // namespace reveal
