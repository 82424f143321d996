#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aig.hpp"

namespace reveal
{

enum class ppg_kind : uint8_t
{
  simple,
  booth_radix4
};

enum class ppa_kind : uint8_t
{
  array,
  wallace,
  dadda,
  compressor_4to2,
  counter_wallace
};

enum class fsa_kind : uint8_t
{
  ripple_carry,
  carry_lookahead,
  carry_skip,
  serial_prefix,
  brent_kung,
  sklansky,
  han_carlson,
  ladner_fischer,
  kogge_stone
};

/*! \brief Tree adders have regular prefix networks; the rest are chained. */
inline bool is_tree_adder( fsa_kind fsa )
{
  switch ( fsa )
  {
  case fsa_kind::brent_kung:
  case fsa_kind::sklansky:
  case fsa_kind::han_carlson:
  case fsa_kind::ladner_fischer:
  case fsa_kind::kogge_stone:
    return true;
  default:
    return false;
  }
}

inline std::array<fsa_kind, 4> const& non_tree_adders()
{
  static std::array<fsa_kind, 4> const kinds{ fsa_kind::ripple_carry, fsa_kind::carry_lookahead,
                                              fsa_kind::carry_skip, fsa_kind::serial_prefix };
  return kinds;
}

inline std::array<fsa_kind, 5> const& tree_adders()
{
  static std::array<fsa_kind, 5> const kinds{ fsa_kind::brent_kung, fsa_kind::sklansky,
                                              fsa_kind::han_carlson, fsa_kind::ladner_fischer,
                                              fsa_kind::kogge_stone };
  return kinds;
}

inline char const* ppg_code( ppg_kind k ) { return k == ppg_kind::simple ? "SP" : "BP"; }

inline char const* ppa_code( ppa_kind k )
{
  switch ( k )
  {
  case ppa_kind::array: return "AR";
  case ppa_kind::wallace: return "WT";
  case ppa_kind::dadda: return "DT";
  case ppa_kind::compressor_4to2: return "4to2";
  case ppa_kind::counter_wallace: return "CWT";
  }
  return "?";
}

inline char const* fsa_code( fsa_kind k )
{
  switch ( k )
  {
  case fsa_kind::ripple_carry: return "RC";
  case fsa_kind::carry_lookahead: return "CL";
  case fsa_kind::carry_skip: return "CK";
  case fsa_kind::serial_prefix: return "SE";
  case fsa_kind::brent_kung: return "BK";
  case fsa_kind::sklansky: return "SK";
  case fsa_kind::han_carlson: return "HC";
  case fsa_kind::ladner_fischer: return "LF";
  case fsa_kind::kogge_stone: return "KS";
  }
  return "?";
}

/*! \brief (PPG, PPA, FSA, width): the classification target and template key. */
struct architecture_label
{
  ppg_kind ppg{ ppg_kind::simple };
  ppa_kind ppa{ ppa_kind::array };
  fsa_kind fsa{ fsa_kind::ripple_carry };
  uint32_t width{ 0 };

  bool operator==( architecture_label const& o ) const
  {
    return ppg == o.ppg && ppa == o.ppa && fsa == o.fsa && width == o.width;
  }

  bool operator<( architecture_label const& o ) const
  {
    auto key = [&]( architecture_label const& l ) {
      return std::tuple( l.width, static_cast<int>( l.ppg ), static_cast<int>( l.ppa ),
                         static_cast<int>( l.fsa ) );
    };
    return key( *this ) < key( o );
  }

  /*! \brief Template code, e.g. "SP_WT_BK_8". */
  std::string code() const
  {
    return std::string( ppg_code( ppg ) ) + "_" + ppa_code( ppa ) + "_" + fsa_code( fsa ) + "_" +
           std::to_string( width );
  }
};

inline std::optional<ppg_kind> parse_ppg( std::string const& s )
{
  if ( s == "SP" ) return ppg_kind::simple;
  if ( s == "BP" ) return ppg_kind::booth_radix4;
  return std::nullopt;
}

inline std::optional<ppa_kind> parse_ppa( std::string const& s )
{
  for ( auto k : { ppa_kind::array, ppa_kind::wallace, ppa_kind::dadda, ppa_kind::compressor_4to2,
                   ppa_kind::counter_wallace } )
  {
    if ( s == ppa_code( k ) ) return k;
  }
  return std::nullopt;
}

inline std::optional<fsa_kind> parse_fsa( std::string const& s )
{
  for ( auto k : { fsa_kind::ripple_carry, fsa_kind::carry_lookahead, fsa_kind::carry_skip,
                   fsa_kind::serial_prefix, fsa_kind::brent_kung, fsa_kind::sklansky,
                   fsa_kind::han_carlson, fsa_kind::ladner_fischer, fsa_kind::kogge_stone } )
  {
    if ( s == fsa_code( k ) ) return k;
  }
  return std::nullopt;
}

/*! \brief Parse "SP_WT_BK_8"; throws on malformed codes. */
inline architecture_label parse_label( std::string const& code )
{
  std::vector<std::string> parts;
  size_t start = 0;
  while ( true )
  {
    size_t const pos = code.find( '_', start );
    parts.push_back( code.substr( start, pos == std::string::npos ? pos : pos - start ) );
    if ( pos == std::string::npos ) break;
    start = pos + 1;
  }
  if ( parts.size() != 4 )
  {
    throw std::invalid_argument( "label: expected PPG_PPA_FSA_WIDTH, got " + code );
  }
  auto const ppg = parse_ppg( parts[0] );
  auto const ppa = parse_ppa( parts[1] );
  auto const fsa = parse_fsa( parts[2] );
  if ( !ppg || !ppa || !fsa )
  {
    throw std::invalid_argument( "label: unknown stage code in " + code );
  }
  return { *ppg, *ppa, *fsa, static_cast<uint32_t>( std::stoul( parts[3] ) ) };
}

/*! \brief Full architecture grid at a width (Booth requires width >= 4). */
inline std::vector<architecture_label> all_labels( uint32_t width )
{
  std::vector<architecture_label> result;
  for ( auto ppg : { ppg_kind::simple, ppg_kind::booth_radix4 } )
  {
    if ( ppg == ppg_kind::booth_radix4 && width < 4 )
    {
      continue;
    }
    for ( auto ppa : { ppa_kind::array, ppa_kind::wallace, ppa_kind::dadda,
                       ppa_kind::compressor_4to2, ppa_kind::counter_wallace } )
    {
      for ( auto fsa : { fsa_kind::ripple_carry, fsa_kind::carry_lookahead, fsa_kind::carry_skip,
                         fsa_kind::serial_prefix, fsa_kind::brent_kung, fsa_kind::sklansky,
                         fsa_kind::han_carlson, fsa_kind::ladner_fischer, fsa_kind::kogge_stone } )
      {
        result.push_back( { ppg, ppa, fsa, width } );
      }
    }
  }
  return result;
}

/*! \brief The 64-template benchmark set used for width-sweeps: three column
 * compressors in both PPG flavors across six adders, plus the simple-PPG
 * array/counter/Dadda/Wallace rows across the seven chained-or-sparse adders.
 */
inline std::vector<architecture_label> paper_labels_64( uint32_t width )
{
  std::vector<architecture_label> result;
  for ( auto ppg : { ppg_kind::simple, ppg_kind::booth_radix4 } )
  {
    for ( auto ppa : { ppa_kind::compressor_4to2, ppa_kind::dadda, ppa_kind::wallace } )
    {
      for ( auto fsa : { fsa_kind::brent_kung, fsa_kind::han_carlson, fsa_kind::sklansky,
                         fsa_kind::kogge_stone, fsa_kind::ladner_fischer, fsa_kind::ripple_carry } )
      {
        result.push_back( { ppg, ppa, fsa, width } );
      }
    }
  }
  for ( auto ppa : { ppa_kind::array, ppa_kind::counter_wallace, ppa_kind::dadda, ppa_kind::wallace } )
  {
    for ( auto fsa : { fsa_kind::brent_kung, fsa_kind::carry_skip, fsa_kind::carry_lookahead,
                       fsa_kind::kogge_stone, fsa_kind::ladner_fischer, fsa_kind::ripple_carry,
                       fsa_kind::serial_prefix } )
    {
      result.push_back( { ppg_kind::simple, ppa, fsa, width } );
    }
  }
  return result;
}

/*! \brief Cells emitted while building a template. */
struct instantiation_log
{
  uint32_t ha{ 0 };
  uint32_t fa{ 0 };
  uint32_t compressors{ 0 };
  uint32_t counters{ 0 };
  uint32_t prefix_cells{ 0 };
};

namespace detail
{

/*! \brief Cell library used by the generators.
 *
 * Cells are built the way RTL templates synthesize: XOR as a sum of
 * products, the full-adder carry as a flat two-level majority.  Constant
 * operands are folded before a cell is committed, and only real cells are
 * counted in the instantiation log.
 */
struct cell_factory
{
  aig_builder& b;
  instantiation_log& log;

  literal xor2( literal a, literal c )
  {
    if ( a.is_constant() )
    {
      return c ^ a.complemented();
    }
    if ( c.is_constant() )
    {
      return a ^ c.complemented();
    }
    if ( a.node() == c.node() )
    {
      return b.constant( a.complemented() != c.complemented() );
    }
    literal const t1 = b.add_and( a, !c );
    literal const t2 = b.add_and( !a, c );
    return b.add_or( t1, t2 );
  }

  literal xor3( literal a, literal c, literal d ) { return xor2( xor2( a, c ), d ); }

  struct sum_carry
  {
    literal sum;
    literal carry;
  };

  /*! \brief Half adder; logged only when it produces gates. */
  sum_carry ha( literal a, literal c )
  {
    if ( a.is_constant() || c.is_constant() || a.node() == c.node() )
    {
      return { xor2( a, c ), b.add_and( a, c ) };
    }
    literal const sum = xor2( a, c );
    literal const carry = b.add_and( a, c );
    ++log.ha;
    return { sum, carry };
  }

  /*! \brief Full adder; degenerates to a half adder when an input is constant. */
  sum_carry fa( literal a, literal c, literal d )
  {
    // fold constants first
    std::vector<literal> ins;
    uint32_t trues = 0;
    for ( literal l : { a, c, d } )
    {
      if ( l.is_constant() )
      {
        trues += l.complemented() ? 1 : 0;
      }
      else
      {
        ins.push_back( l );
      }
    }
    if ( ins.size() == 3 )
    {
      literal const sum = xor3( a, c, d );
      literal const t1 = b.add_and( a, c );
      literal const t2 = b.add_and( a, d );
      literal const t3 = b.add_and( c, d );
      literal const carry = b.add_or( b.add_or( t1, t2 ), t3 );
      ++log.fa;
      return { sum, carry };
    }
    if ( ins.size() == 2 )
    {
      if ( trues == 0 )
      {
        return ha( ins[0], ins[1] );
      }
      // x + y + 1: sum is the complemented xor, carry the disjunction
      if ( ins[0].node() == ins[1].node() )
      {
        return { !xor2( ins[0], ins[1] ), b.add_or( ins[0], ins[1] ) };
      }
      literal const sum = !xor2( ins[0], ins[1] );
      literal const carry = b.add_or( ins[0], ins[1] );
      ++log.ha;
      return { sum, carry };
    }
    if ( ins.size() == 1 )
    {
      switch ( trues )
      {
      case 0: return { ins[0], b.constant( false ) };
      case 1: return { !ins[0], ins[0] };
      default: return { ins[0], b.constant( true ) };
      }
    }
    return { b.constant( ( trues & 1 ) != 0 ), b.constant( trues >= 2 ) };
  }

  /*! \brief Sum of three bits when the carry column is dropped (mod 2^W). */
  literal fa_sum_only( literal a, literal c, literal d ) { return xor3( a, c, d ); }

  literal mux( literal s, literal t, literal e )
  {
    return b.add_or( b.add_and( s, t ), b.add_and( !s, e ) );
  }
};

/*! \brief Bit multiset per weight; positions at or above the limit wrap
 * away modulo 2^limit and are dropped.
 */
struct column_matrix
{
  explicit column_matrix( uint32_t limit ) : cols( limit ) {}

  void add( uint32_t pos, literal l )
  {
    if ( pos < cols.size() && !( l.is_constant() && !l.complemented() ) )
    {
      cols[pos].push_back( l );
    }
  }

  uint32_t max_height() const
  {
    size_t h = 0;
    for ( auto const& c : cols )
    {
      h = std::max( h, c.size() );
    }
    return static_cast<uint32_t>( h );
  }

  std::vector<std::deque<literal>> as_deques() const
  {
    std::vector<std::deque<literal>> result( cols.size() );
    for ( size_t c = 0; c < cols.size(); ++c )
    {
      result[c].assign( cols[c].begin(), cols[c].end() );
    }
    return result;
  }

  std::vector<std::vector<literal>> cols;
};

/*! \brief One partial-product row: (position, bit) pairs, one bit per position. */
using pp_row = std::vector<std::pair<uint32_t, literal>>;

// ---------------------------------------------------------------------------
// Partial product generation
// ---------------------------------------------------------------------------

inline std::vector<pp_row> simple_ppg( aig_builder& b, std::vector<literal> const& a,
                                       std::vector<literal> const& bb )
{
  std::vector<pp_row> rows;
  for ( uint32_t r = 0; r < bb.size(); ++r )
  {
    pp_row row;
    for ( uint32_t j = 0; j < a.size(); ++j )
    {
      row.push_back( { r + j, b.add_and( a[j], bb[r] ) } );
    }
    rows.push_back( std::move( row ) );
  }
  return rows;
}

/*! \brief Radix-4 Booth rows for an unsigned product, complement-and-correct
 * form: each digit contributes a selected (and possibly inverted) multiple of
 * the multiplicand, a +1 correction bit, and a folded sign-extension
 * constant.  All corrections stay inside the 2N-bit modulus.
 */
inline std::vector<pp_row> booth_ppg( cell_factory& cf, std::vector<literal> const& a,
                                      std::vector<literal> const& bb )
{
  aig_builder& b = cf.b;
  uint32_t const n = static_cast<uint32_t>( a.size() );
  uint32_t const limit = 2 * n;
  auto bit_of_b = [&]( int i ) {
    return ( i >= 0 && i < static_cast<int>( n ) ) ? bb[i] : b.constant( false );
  };
  auto bit_of_a = [&]( int i ) {
    return ( i >= 0 && i < static_cast<int>( n ) ) ? a[i] : b.constant( false );
  };

  std::vector<pp_row> rows;
  unsigned __int128 const modulus_mask =
      ( limit >= 128 ) ? ~static_cast<unsigned __int128>( 0 )
                       : ( ( static_cast<unsigned __int128>( 1 ) << limit ) - 1 );
  unsigned __int128 offset = 0;

  for ( uint32_t k = 0; k <= n / 2; ++k )
  {
    literal const x1 = bit_of_b( 2 * k + 1 );
    literal const x0 = bit_of_b( 2 * k );
    literal const xm1 = bit_of_b( 2 * k - 1 );

    literal const one = cf.xor2( x0, xm1 );
    literal const two = b.add_and( cf.xor2( x1, x0 ), !one );
    literal const neg = b.add_and( x1, !b.add_and( x0, xm1 ) );

    std::vector<literal> w( n + 2 ); // w[i+1] = a_i ^ sign, with a_{-1} = a_n = 0
    for ( int i = -1; i <= static_cast<int>( n ); ++i )
    {
      w[i + 1] = cf.xor2( bit_of_a( i ), x1 );
    }

    pp_row main_row;
    for ( uint32_t i = 0; i <= n; ++i )
    {
      uint32_t const pos = 2 * k + i;
      literal const bit = b.add_or( b.add_and( one, w[i + 1] ), b.add_and( two, w[i] ) );
      main_row.push_back( { pos, bit } );
    }
    rows.push_back( std::move( main_row ) );

    pp_row correction;
    correction.push_back( { 2 * k, neg } );
    uint32_t const ext_pos = 2 * k + n + 1;
    if ( ext_pos < limit )
    {
      correction.push_back( { ext_pos, !neg } );
      offset += static_cast<unsigned __int128>( 1 ) << ext_pos;
    }
    rows.push_back( std::move( correction ) );
  }

  // fold accumulated sign-extension constants into one constant row
  unsigned __int128 const constant_row = ( ~offset + 1 ) & modulus_mask;
  pp_row consts;
  for ( uint32_t pos = 0; pos < limit; ++pos )
  {
    if ( ( constant_row >> pos ) & 1 )
    {
      consts.push_back( { pos, b.constant( true ) } );
    }
  }
  if ( !consts.empty() )
  {
    rows.push_back( std::move( consts ) );
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Partial product accumulation: reduce to two addend rows
// ---------------------------------------------------------------------------

struct two_rows
{
  std::vector<literal> x;
  std::vector<literal> y;
};

inline two_rows rows_from_columns( aig_builder& b, std::vector<std::deque<literal>> const& cols )
{
  two_rows result;
  result.x.resize( cols.size(), b.constant( false ) );
  result.y.resize( cols.size(), b.constant( false ) );
  for ( size_t c = 0; c < cols.size(); ++c )
  {
    if ( cols[c].size() > 2 )
    {
      throw std::logic_error( "ppa: reduction did not reach two rows" );
    }
    if ( !cols[c].empty() )
    {
      result.x[c] = cols[c][0];
    }
    if ( cols[c].size() > 1 )
    {
      result.y[c] = cols[c][1];
    }
  }
  return result;
}

inline column_matrix scatter( std::vector<pp_row> const& rows, uint32_t limit )
{
  column_matrix m( limit );
  for ( auto const& row : rows )
  {
    for ( auto const& [pos, bit] : row )
    {
      m.add( pos, bit );
    }
  }
  return m;
}

/*! \brief Carry-save array: rows are folded into a running sum/carry pair one
 * after another, giving the linear-depth accumulator structure.
 */
inline two_rows reduce_array( cell_factory& cf, std::vector<pp_row> const& rows, uint32_t limit )
{
  std::vector<literal> s( limit, cf.b.constant( false ) );
  std::vector<literal> c( limit, cf.b.constant( false ) );
  bool first = true;
  for ( auto const& row : rows )
  {
    std::vector<literal> r( limit, cf.b.constant( false ) );
    for ( auto const& [pos, bit] : row )
    {
      if ( pos < limit )
      {
        r[pos] = bit;
      }
    }
    if ( first )
    {
      s = r;
      first = false;
      continue;
    }
    std::vector<literal> ns( limit, cf.b.constant( false ) );
    std::vector<literal> nc( limit, cf.b.constant( false ) );
    for ( uint32_t col = 0; col < limit; ++col )
    {
      if ( col + 1 < limit )
      {
        auto const [sum, carry] = cf.fa( s[col], c[col], r[col] );
        ns[col] = sum;
        nc[col + 1] = carry;
      }
      else
      {
        ns[col] = cf.fa_sum_only( s[col], c[col], r[col] );
      }
    }
    s = ns;
    c = nc;
  }
  return { s, c };
}

inline two_rows reduce_wallace( cell_factory& cf, column_matrix const& m, uint32_t limit )
{
  auto cols = m.as_deques();
  while ( true )
  {
    uint32_t h = 0;
    for ( auto const& c : cols )
    {
      h = std::max<uint32_t>( h, static_cast<uint32_t>( c.size() ) );
    }
    if ( h <= 2 )
    {
      break;
    }
    std::vector<std::deque<literal>> next( cols.size() );
    for ( uint32_t c = 0; c < cols.size(); ++c )
    {
      bool const top = ( c + 1 == cols.size() );
      auto& wires = cols[c];
      bool const needs_reduction = wires.size() >= 3;
      while ( wires.size() >= 3 )
      {
        literal const a = wires[0], d = wires[1], e = wires[2];
        wires.erase( wires.begin(), wires.begin() + 3 );
        if ( top )
        {
          next[c].push_back( cf.fa_sum_only( a, d, e ) );
        }
        else
        {
          auto const [sum, carry] = cf.fa( a, d, e );
          next[c].push_back( sum );
          next[c + 1].push_back( carry );
        }
      }
      // a remainder of two is compressed only in columns that were reduced;
      // a column already at two wires passes through unchanged
      if ( wires.size() == 2 && needs_reduction )
      {
        literal const a = wires[0], d = wires[1];
        wires.clear();
        if ( top )
        {
          next[c].push_back( cf.xor2( a, d ) );
        }
        else
        {
          auto const [sum, carry] = cf.ha( a, d );
          next[c].push_back( sum );
          next[c + 1].push_back( carry );
        }
      }
      while ( !wires.empty() )
      {
        next[c].push_back( wires.front() );
        wires.pop_front();
      }
    }
    cols = std::move( next );
  }
  return rows_from_columns( cf.b, cols );
}

inline two_rows reduce_dadda( cell_factory& cf, column_matrix const& m, uint32_t limit )
{
  std::vector<uint32_t> targets{ 2 };
  while ( targets.back() < m.max_height() )
  {
    targets.push_back( targets.back() * 3 / 2 );
  }
  auto cols = m.as_deques();
  for ( auto it = targets.rbegin(); it != targets.rend(); ++it )
  {
    uint32_t const target = *it;
    if ( target >= m.max_height() && target != 2 )
    {
      continue;
    }
    for ( uint32_t c = 0; c < cols.size(); ++c )
    {
      bool const top = ( c + 1 == cols.size() );
      auto& wires = cols[c];
      while ( wires.size() > target )
      {
        if ( wires.size() == target + 1 )
        {
          literal const a = wires[0], d = wires[1];
          wires.pop_front();
          wires.pop_front();
          if ( top )
          {
            wires.push_back( cf.xor2( a, d ) );
          }
          else
          {
            auto const [sum, carry] = cf.ha( a, d );
            wires.push_back( sum );
            cols[c + 1].push_back( carry );
          }
        }
        else
        {
          literal const a = wires[0], d = wires[1], e = wires[2];
          wires.erase( wires.begin(), wires.begin() + 3 );
          if ( top )
          {
            wires.push_back( cf.fa_sum_only( a, d, e ) );
          }
          else
          {
            auto const [sum, carry] = cf.fa( a, d, e );
            wires.push_back( sum );
            cols[c + 1].push_back( carry );
          }
        }
      }
    }
  }
  return rows_from_columns( cf.b, cols );
}

/*! \brief 4:2 compressors (two chained full adders) with the horizontal cout
 * chain feeding the next column inside the same stage.
 */
inline two_rows reduce_compressor( cell_factory& cf, column_matrix const& m, uint32_t limit )
{
  auto cols = m.as_deques();
  while ( true )
  {
    uint32_t h = 0;
    for ( auto const& c : cols )
    {
      h = std::max<uint32_t>( h, static_cast<uint32_t>( c.size() ) );
    }
    if ( h <= 2 )
    {
      break;
    }
    std::vector<std::deque<literal>> next( cols.size() );
    if ( h >= 4 )
    {
      std::vector<std::deque<literal>> couts( cols.size() + 1 );
      for ( uint32_t c = 0; c < cols.size(); ++c )
      {
        bool const top = ( c + 1 == cols.size() );
        auto& wires = cols[c];
        while ( wires.size() >= 4 )
        {
          literal const a = wires[0], d = wires[1], e = wires[2], f = wires[3];
          wires.erase( wires.begin(), wires.begin() + 4 );
          literal cin = cf.b.constant( false );
          if ( !couts[c].empty() )
          {
            cin = couts[c].front();
            couts[c].pop_front();
          }
          if ( top )
          {
            next[c].push_back( cf.fa_sum_only( cf.fa_sum_only( a, d, e ), f, cin ) );
          }
          else
          {
            auto const [t, cout] = cf.fa( a, d, e );
            auto const [sum, carry] = cf.fa( t, f, cin );
            ++cf.log.compressors;
            next[c].push_back( sum );
            next[c + 1].push_back( carry );
            couts[c + 1].push_back( cout );
          }
        }
        // unconsumed chain carries are plain wires of this column
        while ( !couts[c].empty() )
        {
          wires.push_back( couts[c].front() );
          couts[c].pop_front();
        }
        while ( !wires.empty() )
        {
          next[c].push_back( wires.front() );
          wires.pop_front();
        }
      }
      cols = std::move( next );
    }
    else
    {
      column_matrix rest( limit );
      for ( uint32_t c = 0; c < cols.size(); ++c )
      {
        for ( auto const& w : cols[c] )
        {
          rest.add( c, w );
        }
      }
      return reduce_wallace( cf, rest, limit );
    }
  }
  return rows_from_columns( cf.b, cols );
}

/*! \brief Wallace reduction with (7:3) counters built from four full adders. */
inline two_rows reduce_counter_wallace( cell_factory& cf, column_matrix const& m, uint32_t limit )
{
  auto cols = m.as_deques();
  while ( true )
  {
    uint32_t h = 0;
    for ( auto const& c : cols )
    {
      h = std::max<uint32_t>( h, static_cast<uint32_t>( c.size() ) );
    }
    if ( h <= 2 )
    {
      break;
    }
    std::vector<std::deque<literal>> next( cols.size() );
    for ( uint32_t c = 0; c < cols.size(); ++c )
    {
      auto& wires = cols[c];
      while ( wires.size() >= 7 && c + 2 < cols.size() )
      {
        std::array<literal, 7> in;
        for ( auto& l : in )
        {
          l = wires.front();
          wires.pop_front();
        }
        auto const [s1, c1] = cf.fa( in[0], in[1], in[2] );
        auto const [s2, c2] = cf.fa( in[3], in[4], in[5] );
        auto const [s3, c3] = cf.fa( s1, s2, in[6] );
        auto const [s4, c4] = cf.fa( c1, c2, c3 );
        ++cf.log.counters;
        next[c].push_back( s3 );
        next[c + 1].push_back( s4 );
        next[c + 2].push_back( c4 );
      }
      bool const top = ( c + 1 == cols.size() );
      bool const needs_reduction = wires.size() >= 3;
      while ( wires.size() >= 3 )
      {
        literal const a = wires[0], d = wires[1], e = wires[2];
        wires.erase( wires.begin(), wires.begin() + 3 );
        if ( top )
        {
          next[c].push_back( cf.fa_sum_only( a, d, e ) );
        }
        else
        {
          auto const [sum, carry] = cf.fa( a, d, e );
          next[c].push_back( sum );
          next[c + 1].push_back( carry );
        }
      }
      if ( wires.size() == 2 && needs_reduction )
      {
        literal const a = wires[0], d = wires[1];
        wires.clear();
        if ( top )
        {
          next[c].push_back( cf.xor2( a, d ) );
        }
        else
        {
          auto const [sum, carry] = cf.ha( a, d );
          next[c].push_back( sum );
          next[c + 1].push_back( carry );
        }
      }
      while ( !wires.empty() )
      {
        next[c].push_back( wires.front() );
        wires.pop_front();
      }
    }
    cols = std::move( next );
  }
  return rows_from_columns( cf.b, cols );
}

// ---------------------------------------------------------------------------
// Final stage adders
// ---------------------------------------------------------------------------

/*! \brief A prefix network as levels of (target, source) combines; within a
 * level all combines read the previous level's state.
 */
using prefix_network = std::vector<std::vector<std::pair<uint32_t, uint32_t>>>;

inline prefix_network serial_prefix_network( uint32_t n )
{
  prefix_network net;
  for ( uint32_t i = 1; i < n; ++i )
  {
    net.push_back( { { i, i - 1 } } );
  }
  return net;
}

inline prefix_network kogge_stone_network( uint32_t n )
{
  prefix_network net;
  for ( uint32_t d = 1; d < n; d *= 2 )
  {
    std::vector<std::pair<uint32_t, uint32_t>> level;
    for ( uint32_t i = d; i < n; ++i )
    {
      level.push_back( { i, i - d } );
    }
    net.push_back( std::move( level ) );
  }
  return net;
}

inline prefix_network sklansky_network( uint32_t n )
{
  prefix_network net;
  for ( uint32_t d = 1; d < n; d *= 2 )
  {
    std::vector<std::pair<uint32_t, uint32_t>> level;
    for ( uint32_t i = 0; i < n; ++i )
    {
      if ( i & d )
      {
        level.push_back( { i, ( i & ~( 2 * d - 1 ) ) + d - 1 } );
      }
    }
    if ( !level.empty() )
    {
      net.push_back( std::move( level ) );
    }
  }
  return net;
}

inline prefix_network brent_kung_network( uint32_t n )
{
  prefix_network net;
  for ( uint32_t d = 2; d / 2 < n; d *= 2 )
  {
    std::vector<std::pair<uint32_t, uint32_t>> level;
    for ( uint32_t i = d - 1; i < n; i += d )
    {
      level.push_back( { i, i - d / 2 } );
    }
    if ( !level.empty() )
    {
      net.push_back( std::move( level ) );
    }
    if ( d >= n )
    {
      break;
    }
  }
  uint32_t top = 2;
  while ( top * 2 < n )
  {
    top *= 2;
  }
  for ( uint32_t d = top; d >= 2; d /= 2 )
  {
    std::vector<std::pair<uint32_t, uint32_t>> level;
    for ( uint32_t i = d + d / 2 - 1; i < n; i += d )
    {
      level.push_back( { i, i - d / 2 } );
    }
    if ( !level.empty() )
    {
      net.push_back( std::move( level ) );
    }
  }
  return net;
}

inline prefix_network han_carlson_network( uint32_t n )
{
  prefix_network net;
  std::vector<std::pair<uint32_t, uint32_t>> first;
  for ( uint32_t i = 1; i < n; i += 2 )
  {
    first.push_back( { i, i - 1 } );
  }
  if ( !first.empty() )
  {
    net.push_back( std::move( first ) );
  }
  for ( uint32_t d = 2; d < n; d *= 2 )
  {
    std::vector<std::pair<uint32_t, uint32_t>> level;
    for ( uint32_t i = d + 1; i < n; i += 2 )
    {
      level.push_back( { i, i - d } );
    }
    if ( !level.empty() )
    {
      net.push_back( std::move( level ) );
    }
  }
  std::vector<std::pair<uint32_t, uint32_t>> last;
  for ( uint32_t i = 2; i < n; i += 2 )
  {
    last.push_back( { i, i - 1 } );
  }
  if ( !last.empty() )
  {
    net.push_back( std::move( last ) );
  }
  return net;
}

inline prefix_network ladner_fischer_network( uint32_t n )
{
  prefix_network net;
  std::vector<std::pair<uint32_t, uint32_t>> first;
  for ( uint32_t i = 1; i < n; i += 2 )
  {
    first.push_back( { i, i - 1 } );
  }
  if ( !first.empty() )
  {
    net.push_back( std::move( first ) );
  }
  uint32_t const odd_count = n / 2; // odd positions 1, 3, ...
  for ( auto const& level : sklansky_network( odd_count ) )
  {
    std::vector<std::pair<uint32_t, uint32_t>> mapped;
    for ( auto const& [t, s] : level )
    {
      mapped.push_back( { 2 * t + 1, 2 * s + 1 } );
    }
    net.push_back( std::move( mapped ) );
  }
  std::vector<std::pair<uint32_t, uint32_t>> last;
  for ( uint32_t i = 2; i < n; i += 2 )
  {
    last.push_back( { i, i - 1 } );
  }
  if ( !last.empty() )
  {
    net.push_back( std::move( last ) );
  }
  return net;
}

/*! \brief Sparse or dense prefix adder over the precomputed network.
 *
 * P signals are built only where a later combine consumes them, and G
 * signals only on paths to a needed carry, so no dead cells are emitted.
 */
inline std::vector<literal> prefix_adder( cell_factory& cf, std::vector<literal> const& x,
                                          std::vector<literal> const& y, prefix_network const& net,
                                          bool want_cout )
{
  aig_builder& b = cf.b;
  uint32_t const n = static_cast<uint32_t>( x.size() );

  struct state_node
  {
    int hi{ -1 }; // previous state of the target position
    int lo{ -1 }; // previous state of the source position
    uint32_t pos{ 0 };
    bool need_g{ false };
    bool need_p{ false };
    literal g, p;
  };

  std::vector<state_node> nodes( n );
  for ( uint32_t i = 0; i < n; ++i )
  {
    nodes[i].pos = i;
  }
  std::vector<int> current( n );
  for ( uint32_t i = 0; i < n; ++i )
  {
    current[i] = static_cast<int>( i );
  }
  for ( auto const& level : net )
  {
    std::vector<int> const snapshot = current;
    for ( auto const& [t, s] : level )
    {
      state_node node;
      node.hi = snapshot[t];
      node.lo = snapshot[s];
      node.pos = t;
      nodes.push_back( node );
      current[t] = static_cast<int>( nodes.size() - 1 );
    }
  }

  // mark needed G/P values backward from the consumed carries
  for ( uint32_t i = 1; i < n; ++i )
  {
    nodes[current[i - 1]].need_g = true;
  }
  if ( want_cout )
  {
    nodes[current[n - 1]].need_g = true;
  }
  for ( size_t idx = nodes.size(); idx-- > 0; )
  {
    auto const& nd = nodes[idx];
    if ( nd.hi < 0 )
    {
      continue;
    }
    if ( nd.need_g )
    {
      nodes[nd.hi].need_g = true;
      nodes[nd.hi].need_p = true;
      nodes[nd.lo].need_g = true;
    }
    if ( nd.need_p )
    {
      nodes[nd.hi].need_p = true;
      nodes[nd.lo].need_p = true;
    }
  }

  // generate/propagate cells; the sum path needs every p
  std::vector<literal> p( n );
  for ( uint32_t i = 0; i < n; ++i )
  {
    bool const real = !x[i].is_constant() && !y[i].is_constant() && x[i].node() != y[i].node();
    p[i] = cf.xor2( x[i], y[i] );
    nodes[i].p = p[i];
    if ( nodes[i].need_g )
    {
      nodes[i].g = b.add_and( x[i], y[i] );
      if ( real )
      {
        ++cf.log.ha;
      }
    }
  }
  for ( size_t idx = n; idx < nodes.size(); ++idx )
  {
    auto& nd = nodes[idx];
    auto const& hi = nodes[nd.hi];
    auto const& lo = nodes[nd.lo];
    if ( nd.need_g )
    {
      nd.g = b.add_or( hi.g, b.add_and( hi.p, lo.g ) );
    }
    if ( nd.need_p )
    {
      nd.p = b.add_and( hi.p, lo.p );
    }
    if ( nd.need_g || nd.need_p )
    {
      ++cf.log.prefix_cells;
    }
  }

  std::vector<literal> sums;
  sums.push_back( p[0] );
  for ( uint32_t i = 1; i < n; ++i )
  {
    sums.push_back( cf.xor2( p[i], nodes[current[i - 1]].g ) );
  }
  if ( want_cout )
  {
    sums.push_back( nodes[current[n - 1]].g );
  }
  return sums;
}

inline std::vector<literal> ripple_adder( cell_factory& cf, std::vector<literal> const& x,
                                          std::vector<literal> const& y, bool want_cout )
{
  uint32_t const n = static_cast<uint32_t>( x.size() );
  std::vector<literal> sums( n );
  literal carry = cf.b.constant( false );
  for ( uint32_t i = 0; i < n; ++i )
  {
    if ( i + 1 == n && !want_cout )
    {
      sums[i] = cf.fa_sum_only( x[i], y[i], carry );
    }
    else
    {
      auto const [s, c] = cf.fa( x[i], y[i], carry );
      sums[i] = s;
      carry = c;
    }
  }
  if ( want_cout )
  {
    sums.push_back( carry );
  }
  return sums;
}

/*! \brief 4-bit group carry-lookahead blocks, rippled at group level. */
inline std::vector<literal> cla_adder( cell_factory& cf, std::vector<literal> const& x,
                                       std::vector<literal> const& y, bool want_cout )
{
  aig_builder& b = cf.b;
  uint32_t const n = static_cast<uint32_t>( x.size() );
  std::vector<literal> sums( n );
  literal cin = b.constant( false );
  for ( uint32_t base = 0; base < n; base += 4 )
  {
    uint32_t const size = std::min<uint32_t>( 4, n - base );
    std::vector<literal> p( size ), g( size );
    for ( uint32_t i = 0; i < size; ++i )
    {
      bool const real = !x[base + i].is_constant() && !y[base + i].is_constant() &&
                        x[base + i].node() != y[base + i].node();
      p[i] = cf.xor2( x[base + i], y[base + i] );
      g[i] = b.add_and( x[base + i], y[base + i] );
      if ( real )
      {
        ++cf.log.ha;
      }
    }
    // two-level lookahead: c_{i+1} = g_i + p_i g_{i-1} + ... + p_i..p_0 cin
    std::vector<literal> carries( size + 1 );
    carries[0] = cin;
    for ( uint32_t i = 1; i <= size; ++i )
    {
      bool const last_carry = ( base + i == n );
      if ( last_carry && !want_cout )
      {
        break;
      }
      literal acc = g[i - 1];
      literal chain = p[i - 1];
      for ( int j = static_cast<int>( i ) - 2; j >= 0; --j )
      {
        acc = b.add_or( acc, b.add_and( chain, g[j] ) );
        chain = b.add_and( chain, p[j] );
      }
      acc = b.add_or( acc, b.add_and( chain, cin ) );
      carries[i] = acc;
    }
    for ( uint32_t i = 0; i < size; ++i )
    {
      sums[base + i] = cf.xor2( p[i], carries[i] );
    }
    cin = carries[size];
  }
  if ( want_cout )
  {
    sums.push_back( cin );
  }
  return sums;
}

/*! \brief 4-bit groups that ripple internally, with a propagate-controlled
 * bypass mux on the group carry.
 */
inline std::vector<literal> carry_skip_adder( cell_factory& cf, std::vector<literal> const& x,
                                              std::vector<literal> const& y, bool want_cout )
{
  aig_builder& b = cf.b;
  uint32_t const n = static_cast<uint32_t>( x.size() );
  std::vector<literal> sums( n );
  literal cin = b.constant( false );
  for ( uint32_t base = 0; base < n; base += 4 )
  {
    uint32_t const size = std::min<uint32_t>( 4, n - base );
    bool const last_group = ( base + size == n );
    literal carry = cin;
    literal group_p = b.constant( true );
    for ( uint32_t i = 0; i < size; ++i )
    {
      group_p = b.add_and( group_p, cf.xor2( x[base + i], y[base + i] ) );
      if ( i + 1 == size && last_group && !want_cout )
      {
        sums[base + i] = cf.fa_sum_only( x[base + i], y[base + i], carry );
      }
      else
      {
        auto const [s, c] = cf.fa( x[base + i], y[base + i], carry );
        sums[base + i] = s;
        carry = c;
      }
    }
    if ( !last_group || want_cout )
    {
      cin = cf.mux( group_p, cin, carry );
    }
  }
  if ( want_cout )
  {
    sums.push_back( cin );
  }
  return sums;
}

inline std::vector<literal> final_adder( cell_factory& cf, fsa_kind fsa,
                                         std::vector<literal> const& x, std::vector<literal> const& y,
                                         bool want_cout )
{
  switch ( fsa )
  {
  case fsa_kind::ripple_carry: return ripple_adder( cf, x, y, want_cout );
  case fsa_kind::carry_lookahead: return cla_adder( cf, x, y, want_cout );
  case fsa_kind::carry_skip: return carry_skip_adder( cf, x, y, want_cout );
  case fsa_kind::serial_prefix:
    return prefix_adder( cf, x, y, serial_prefix_network( static_cast<uint32_t>( x.size() ) ), want_cout );
  case fsa_kind::brent_kung:
    return prefix_adder( cf, x, y, brent_kung_network( static_cast<uint32_t>( x.size() ) ), want_cout );
  case fsa_kind::sklansky:
    return prefix_adder( cf, x, y, sklansky_network( static_cast<uint32_t>( x.size() ) ), want_cout );
  case fsa_kind::han_carlson:
    return prefix_adder( cf, x, y, han_carlson_network( static_cast<uint32_t>( x.size() ) ), want_cout );
  case fsa_kind::ladner_fischer:
    return prefix_adder( cf, x, y, ladner_fischer_network( static_cast<uint32_t>( x.size() ) ), want_cout );
  case fsa_kind::kogge_stone:
    return prefix_adder( cf, x, y, kogge_stone_network( static_cast<uint32_t>( x.size() ) ), want_cout );
  }
  throw std::invalid_argument( "final_adder: unknown adder kind" );
}

inline two_rows accumulate( cell_factory& cf, ppa_kind ppa, std::vector<pp_row> const& rows,
                            uint32_t limit )
{
  switch ( ppa )
  {
  case ppa_kind::array: return reduce_array( cf, rows, limit );
  case ppa_kind::wallace: return reduce_wallace( cf, scatter( rows, limit ), limit );
  case ppa_kind::dadda: return reduce_dadda( cf, scatter( rows, limit ), limit );
  case ppa_kind::compressor_4to2: return reduce_compressor( cf, scatter( rows, limit ), limit );
  case ppa_kind::counter_wallace: return reduce_counter_wallace( cf, scatter( rows, limit ), limit );
  }
  throw std::invalid_argument( "accumulate: unknown accumulator kind" );
}

} // namespace detail

struct generated_multiplier
{
  aig circuit;
  instantiation_log log;
};

/*! \brief Build an unsigned N x N multiplier with the given architecture.
 *
 * 2N inputs (multiplicand a then multiplier b, LSB first), 2N product
 * outputs.  The three stages compose independently; the log records every
 * arithmetic cell the construction instantiated.
 */
inline generated_multiplier generate_multiplier( architecture_label const& label )
{
  uint32_t const n = label.width;
  if ( n < 2 )
  {
    throw std::invalid_argument( "generate_multiplier: width must be at least 2" );
  }
  if ( label.ppg == ppg_kind::booth_radix4 && n < 4 )
  {
    throw std::invalid_argument( "generate_multiplier: Booth encoding requires width >= 4" );
  }
  if ( n > 64 )
  {
    throw std::invalid_argument( "generate_multiplier: widths above 64 are not supported" );
  }

  aig_builder b;
  instantiation_log log;
  detail::cell_factory cf{ b, log };

  std::vector<literal> a( n ), bb( n );
  for ( uint32_t i = 0; i < n; ++i )
  {
    a[i] = b.add_input();
    b.set_input_name( i, "a" + std::to_string( i ) );
  }
  for ( uint32_t i = 0; i < n; ++i )
  {
    bb[i] = b.add_input();
    b.set_input_name( n + i, "b" + std::to_string( i ) );
  }

  std::vector<detail::pp_row> const rows = ( label.ppg == ppg_kind::simple )
                                               ? detail::simple_ppg( b, a, bb )
                                               : detail::booth_ppg( cf, a, bb );
  detail::two_rows const addends = detail::accumulate( cf, label.ppa, rows, 2 * n );
  std::vector<literal> const product =
      detail::final_adder( cf, label.fsa, addends.x, addends.y, false );

  for ( uint32_t i = 0; i < 2 * n; ++i )
  {
    b.add_output( product[i] );
    b.set_output_name( i, "p" + std::to_string( i ) );
  }
  return { b.build(), log };
}

/*! \brief Standalone adder: two width-bit operands in, width+1 sums out. */
inline aig generate_adder( fsa_kind fsa, uint32_t width )
{
  if ( width < 1 )
  {
    throw std::invalid_argument( "generate_adder: width must be at least 1" );
  }
  aig_builder b;
  instantiation_log log;
  detail::cell_factory cf{ b, log };
  std::vector<literal> x( width ), y( width );
  for ( uint32_t i = 0; i < width; ++i )
  {
    x[i] = b.add_input();
    b.set_input_name( i, "x" + std::to_string( i ) );
  }
  for ( uint32_t i = 0; i < width; ++i )
  {
    y[i] = b.add_input();
    b.set_input_name( width + i, "y" + std::to_string( i ) );
  }
  auto const sums = detail::final_adder( cf, fsa, x, y, true );
  for ( uint32_t i = 0; i < sums.size(); ++i )
  {
    b.add_output( sums[i] );
    b.set_output_name( i, i < width ? "s" + std::to_string( i ) : "cout" );
  }
  return b.build();
}

/*! \brief PPG+PPA only, exposing the two final addend rows as outputs.
 * Used to check that the accumulator semantics is independent of the FSA.
 */
inline aig generate_ppa_boundary( architecture_label const& label )
{
  uint32_t const n = label.width;
  if ( n < 2 || ( label.ppg == ppg_kind::booth_radix4 && n < 4 ) )
  {
    throw std::invalid_argument( "generate_ppa_boundary: unsupported width" );
  }
  aig_builder b;
  instantiation_log log;
  detail::cell_factory cf{ b, log };
  std::vector<literal> a( n ), bb( n );
  for ( uint32_t i = 0; i < n; ++i )
  {
    a[i] = b.add_input();
  }
  for ( uint32_t i = 0; i < n; ++i )
  {
    bb[i] = b.add_input();
  }
  auto const rows = ( label.ppg == ppg_kind::simple ) ? detail::simple_ppg( b, a, bb )
                                                      : detail::booth_ppg( cf, a, bb );
  auto const addends = detail::accumulate( cf, label.ppa, rows, 2 * n );
  for ( auto const& l : addends.x )
  {
    b.add_output( l );
  }
  for ( auto const& l : addends.y )
  {
    b.add_output( l );
  }
  return b.build();
}

} // namespace reveal
