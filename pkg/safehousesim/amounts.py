"""Fixed-point amounts, prices and USD values.

Token quantities carry 18 decimals, prices and USD values carry 8. All
arithmetic is integer; every helper floors.
"""

from decimal import Decimal, InvalidOperation, localcontext

from safehousesim.errors import AmountOverflow

TOKEN_DECIMALS = 18
USD_DECIMALS = 8

TOKEN = 10**TOKEN_DECIMALS
USD = 10**USD_DECIMALS
BASIS_POINTS = 10_000

MAX_UINT128 = (1 << 128) - 1


def checked(value: int) -> int:
    """Return value if it fits an unsigned 128-bit integer.

    Raises:
        AmountOverflow: If value is negative or wider than 128 bits
    """
    if value < 0 or value > MAX_UINT128:
        raise AmountOverflow(f"amount {value} outside the unsigned 128-bit range")
    return value


def checked_add(a: int, b: int) -> int:
    return checked(a + b)


def checked_sub(a: int, b: int) -> int:
    return checked(a - b)


def value_of(price: int, qty: int) -> int:
    """USD value of qty base units at an 8-decimal price, floored."""
    return checked(price * qty // TOKEN)


def ceil_div(numerator: int, denominator: int) -> int:
    return -(-numerator // denominator)


def parse_decimal(text: str, decimals: int) -> int:
    """Parse a non-negative decimal string into fixed-point base units.

    Args:
        text: Decimal string such as "12.5"
        decimals: Number of fractional digits of the fixed-point unit

    Returns:
        The value scaled by 10**decimals

    Raises:
        ValueError: If text is not a decimal, is negative, or carries more
            fractional digits than the unit allows
    """
    try:
        number = Decimal(str(text).strip())
    except InvalidOperation:
        raise ValueError(f"'{text}' is not a decimal number")

    if not number.is_finite() or number < 0:
        raise ValueError(f"'{text}' must be a finite non-negative number")

    with localcontext() as ctx:
        ctx.prec = 80
        scaled = number.scaleb(decimals)
    if scaled != scaled.to_integral_value():
        raise ValueError(f"'{text}' has more than {decimals} fractional digits")
    return checked(int(scaled))


def parse_amount(text: str) -> int:
    return parse_decimal(text, TOKEN_DECIMALS)


def parse_usd(text: str) -> int:
    return parse_decimal(text, USD_DECIMALS)


def format_decimal(value: int, decimals: int) -> str:
    """Render fixed-point base units with exactly `decimals` fractional digits."""
    sign = "-" if value < 0 else ""
    whole, frac = divmod(abs(value), 10**decimals)
    if decimals == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:0{decimals}d}"


def format_usd(value: int) -> str:
    return format_decimal(value, USD_DECIMALS)


def format_amount(value: int) -> str:
    return format_decimal(value, TOKEN_DECIMALS)
