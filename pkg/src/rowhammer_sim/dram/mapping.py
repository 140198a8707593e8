"""Physical address <-> DRAM coordinate mapping (row-major, optional XOR bank hashing)."""

from rowhammer_sim.dram.schema import AddressMapping, DramCoordinate, DramGeometry
from rowhammer_sim.errors import AddressRangeError
from rowhammer_sim.utils.bits import is_power_of_two


def validate_mapping(geometry: DramGeometry, mapping: AddressMapping) -> None:
    if mapping.xor_bank_mask and not is_power_of_two(geometry.banks_per_rank):
        raise AddressRangeError("XOR bank hashing needs a power-of-two bank count")


def _xor_term(row: int, geometry: DramGeometry, mapping: AddressMapping) -> int:
    if not mapping.xor_bank_mask:
        return 0
    return (row & mapping.xor_bank_mask) & (geometry.banks_per_rank - 1)


def decode(phys: int, geometry: DramGeometry, mapping: AddressMapping) -> tuple[int, int, int]:
    """Fast path: phys -> (flat bank id, row, byte offset)."""
    if not 0 <= phys < geometry.capacity:
        raise AddressRangeError(f"address {phys:#x} outside capacity {geometry.capacity:#x}")
    rest, byte = divmod(phys, geometry.bytes_per_row)
    rest, row = divmod(rest, geometry.rows_per_bank)
    upper, bank = divmod(rest, geometry.banks_per_rank)
    bank ^= _xor_term(row, geometry, mapping)
    return upper * geometry.banks_per_rank + bank, row, byte


def encode(bank_id: int, row: int, byte: int, geometry: DramGeometry, mapping: AddressMapping) -> int:
    """Inverse of decode."""
    if not (
        0 <= bank_id < geometry.total_banks
        and 0 <= row < geometry.rows_per_bank
        and 0 <= byte < geometry.bytes_per_row
    ):
        raise AddressRangeError(f"coordinate bank={bank_id} row={row} byte={byte} out of range")
    upper, bank = divmod(bank_id, geometry.banks_per_rank)
    bank ^= _xor_term(row, geometry, mapping)
    linear_bank = upper * geometry.banks_per_rank + bank
    return (linear_bank * geometry.rows_per_bank + row) * geometry.bytes_per_row + byte


def split_bank_id(bank_id: int, geometry: DramGeometry) -> tuple[int, int, int, int]:
    rest, bank = divmod(bank_id, geometry.banks_per_rank)
    rest, rank = divmod(rest, geometry.ranks_per_dimm)
    channel, dimm = divmod(rest, geometry.dimms_per_channel)
    return channel, dimm, rank, bank


def map_address(
    phys: int, geometry: DramGeometry, mapping: AddressMapping | None = None
) -> DramCoordinate:
    mapping = mapping or AddressMapping()
    bank_id, row, byte = decode(phys, geometry, mapping)
    channel, dimm, rank, bank = split_bank_id(bank_id, geometry)
    return DramCoordinate(
        channel=channel, dimm=dimm, rank=rank, bank=bank, row=row, byte_offset=byte
    )


def unmap_coordinate(
    coord: DramCoordinate, geometry: DramGeometry, mapping: AddressMapping | None = None
) -> int:
    if not coord.in_geometry(geometry):
        raise AddressRangeError(f"{coord} outside geometry")
    return encode(coord.bank_id(geometry), coord.row, coord.byte_offset, geometry, mapping or AddressMapping())
