"""Country code tables."""

# ISO 3166-1 alpha-2, officially assigned codes.
ISO_ALPHA2 = frozenset("""
AD AE AF AG AI AL AM AO AQ AR AS AT AU AW AX AZ BA BB BD BE BF BG BH BI BJ BL
BM BN BO BQ BR BS BT BV BW BY BZ CA CC CD CF CG CH CI CK CL CM CN CO CR CU CV
CW CX CY CZ DE DJ DK DM DO DZ EC EE EG EH ER ES ET FI FJ FK FM FO FR GA GB GD
GE GF GG GH GI GL GM GN GP GQ GR GS GT GU GW GY HK HM HN HR HT HU ID IE IL IM
IN IO IQ IR IS IT JE JM JO JP KE KG KH KI KM KN KP KR KW KY KZ LA LB LC LI LK
LR LS LT LU LV LY MA MC MD ME MF MG MH MK ML MM MN MO MP MQ MR MS MT MU MV MW
MX MY MZ NA NC NE NF NG NI NL NO NP NR NU NZ OM PA PE PF PG PH PK PL PM PN PR
PS PT PW PY QA RE RO RS RU RW SA SB SC SD SE SG SH SI SJ SK SL SM SN SO SR SS
ST SV SX SY SZ TC TD TF TG TH TJ TK TL TM TN TO TR TT TV TW TZ UA UG UM US UY
UZ VA VC VE VG VI VN VU WF WS YE YT ZA ZM ZW
""".split())

UNKNOWN = "??"

# Top-20 economies by GDP as ISO codes. South Korea is KR and South Africa
# ZA; the informal labels SK and SA are Slovakia and Saudi Arabia in ISO.
TOP20 = (
    "US", "CN", "JP", "DE", "GB", "IN", "FR", "IT", "CA", "KR",
    "RU", "BR", "AU", "ES", "MX", "ID", "NL", "ZA", "TR", "CH",
)


def country_pool(n):
    """First ``n`` labels for synthetic country assignment."""
    if n <= len(TOP20):
        return list(TOP20[:n])
    extra = sorted(ISO_ALPHA2 - set(TOP20))
    if n > len(TOP20) + len(extra):
        raise ValueError(f"at most {len(TOP20) + len(extra)} countries available")
    return list(TOP20) + extra[: n - len(TOP20)]
