from datetime import date, datetime

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regimecast.errors import (
    DomainError,
    DuplicateKeyError,
    FlaggedRecordError,
    GapError,
    RangeError,
    SchemaError,
)
from regimecast.ingest import (
    IncidentRecord,
    Status,
    Stream,
    classify_incident,
    daily_counts,
    incidents_to_csv,
    parse_hospitalization,
    parse_incidents,
    response_intervals,
)

HEADER = ("IncidentPrimaryKey,Jurisdiction,Problem,Priority_Number,"
          "Time_PhonePickUp,Time_First_Unit_Assigned,Time_First_Unit_Enroute,"
          "Time_First_Unit_Arrived,Call_Disposition,Longitude,Latitude")


def row(key="K1", problem="Chest Pain", priority="3",
        t0="2020-03-17 12:00:00", t1="2020-03-17 12:01:02",
        t2="2020-03-17 12:02:00", t3="2020-03-17 12:09:30",
        disposition="Transported", lon="-97.74", lat="30.27"):
    return f"{key},Austin,{problem},{priority},{t0},{t1},{t2},{t3},{disposition},{lon},{lat}"


class TestParseIncidents:
    def test_strings_kept_verbatim(self):
        table = parse_incidents(HEADER + "\n" + row(problem="Chest Pain",
                                                    disposition="Refusal") + "\n")
        assert len(table) == 1
        record = table.records[0]
        assert record.problem == "Chest Pain"
        assert record.disposition == "Refusal"
        assert record.priority == 3

    def test_header_only_is_empty(self):
        table = parse_incidents(HEADER + "\n")
        assert len(table) == 0
        assert table.report.rows_rejected == 0

    def test_inverted_timestamps_flagged_not_dropped(self):
        bad = row(key="K9", t2="2020-03-17 12:05:00", t3="2020-03-17 12:03:00")
        table = parse_incidents("\n".join([HEADER, row(), bad]) + "\n")
        assert len(table) == 2
        assert table.report.flagged_keys == ["K9"]

    def test_missing_mandatory_column(self):
        text = "IncidentPrimaryKey,Problem\nK1,Fall\n"
        with pytest.raises(SchemaError, match="call_disposition"):
            parse_incidents(text)

    def test_duplicate_keys_rejected(self):
        text = "\n".join([HEADER, row(key="K1"), row(key="K1")]) + "\n"
        with pytest.raises(DuplicateKeyError) as err:
            parse_incidents(text)
        assert "K1" in str(err.value)

    def test_unparseable_timestamp_becomes_absent(self):
        table = parse_incidents(HEADER + "\n" + row(t1="not a time") + "\n")
        assert table.records[0].t_assigned is None
        assert table.records[0].t_phone_pickup is not None

    def test_bad_priority_rejected_with_reason(self):
        text = "\n".join([HEADER, row(key="A", priority="22"), row(key="B")]) + "\n"
        table = parse_incidents(text)
        assert len(table) == 1
        assert table.report.reasons == {"invalid_priority": 1}

    def test_missing_fields_rejected(self):
        text = "\n".join([HEADER, row(key=""), row(key="B", problem=""),
                          row(key="C", disposition=""), row(key="D")]) + "\n"
        table = parse_incidents(text)
        assert len(table) == 1
        assert table.report.rows_rejected == 3
        assert set(table.report.reasons) == {
            "missing_primary_key", "missing_problem", "missing_disposition"}

    def test_custom_timestamp_format(self):
        text = HEADER + "\n" + row(t0="17/03/2020 12:00", t1="", t2="", t3="") + "\n"
        table = parse_incidents(text, timestamp_format="%d/%m/%Y %H:%M")
        assert table.records[0].t_phone_pickup == datetime(2020, 3, 17, 12, 0)

    def test_referred_counted_separately_and_admitted(self):
        table = parse_incidents(HEADER + "\n" + row(disposition="Referred") + "\n")
        assert table.report.referred_count == 1
        assert classify_incident(table.records[0]).status is Status.ADMITTED

    def test_round_trip_identical_records(self):
        text = "\n".join([
            HEADER,
            row(),
            row(key="K2", problem="Pandemic Respiratory", disposition="No Patient",
                priority="", t1="", lon="", lat=""),
        ]) + "\n"
        table = parse_incidents(text)
        again = parse_incidents(incidents_to_csv(table))
        assert again.records == table.records


class TestClassify:
    @pytest.mark.parametrize("problem,disposition,stream,status", [
        ("Pandemic", "Refusal", Stream.PANDEMIC, Status.DEFUNCT),
        ("Fall", "Transported to hospital", Stream.NON_PANDEMIC, Status.ADMITTED),
        ("PANDEMIC RESPIRATORY", " no patient ", Stream.PANDEMIC, Status.DEFUNCT),
        ("Sick", "Call Cancelled", Stream.NON_PANDEMIC, Status.DEFUNCT),
        ("Sick", "Information Call Only", Stream.NON_PANDEMIC, Status.DEFUNCT),
    ])
    def test_examples(self, problem, disposition, stream, status):
        record = IncidentRecord(primary_key="X", problem=problem,
                                disposition=disposition)
        label = classify_incident(record)
        assert (label.stream, label.status) == (stream, status)

    def test_defunct_is_exact_match_not_substring(self):
        record = IncidentRecord(primary_key="X", problem="Fall",
                                disposition="Refusal of care documented")
        assert classify_incident(record).status is Status.ADMITTED

    @given(st.sampled_from(["Refusal", "No Patient", "Other", "Duplicate Call",
                            "Call Cancelled", "False Alarm Call",
                            "Information Call Only"]),
           st.sampled_from(["", " ", "  "]), st.booleans())
    @settings(max_examples=30, deadline=None)
    def test_case_and_whitespace_invariance(self, dispo, pad, upper):
        text = pad + (dispo.upper() if upper else dispo.lower()) + pad
        record = IncidentRecord(primary_key="X", problem="Sick", disposition=text)
        assert classify_incident(record).status is Status.DEFUNCT


class TestDailyCounts:
    def make_records(self, spec):
        out = []
        for i, day in enumerate(spec):
            out.append(IncidentRecord(
                primary_key=f"R{i}", problem="Sick", disposition="Transported",
                t_phone_pickup=datetime(day.year, day.month, day.day, 8, 0)))
        return out

    def test_direct_count(self):
        records = self.make_records([date(2020, 3, 17)] * 3)
        s = daily_counts(records, None, (date(2020, 3, 17), date(2020, 3, 18)))
        assert s.values.tolist() == [3.0, 0.0]

    def test_empty_filter_gives_zeros(self):
        records = self.make_records([date(2020, 3, 17)])
        s = daily_counts(records, lambda lab: False,
                         (date(2020, 3, 16), date(2020, 3, 20)))
        assert s.values.tolist() == [0.0] * 5

    def test_length_matches_calendar(self):
        s = daily_counts([], None, (date(2020, 1, 1), date(2020, 1, 31)))
        assert len(s) == 31

    def test_out_of_calendar_matching_record_is_error(self):
        records = self.make_records([date(2020, 3, 17)])
        with pytest.raises(RangeError, match="R0"):
            daily_counts(records, None, (date(2020, 3, 18), date(2020, 3, 19)))

    def test_partition_property(self):
        rng_days = [date(2020, 3, 16), date(2020, 3, 17), date(2020, 3, 18)]
        records = []
        i = 0
        for day in rng_days:
            for problem in ("Pandemic", "Sick"):
                for dispo in ("Refusal", "Transported"):
                    i += 1
                    records.append(IncidentRecord(
                        primary_key=f"P{i}", problem=problem, disposition=dispo,
                        t_phone_pickup=datetime(day.year, day.month, day.day, 9, 0)))
        calendar = (date(2020, 3, 16), date(2020, 3, 18))
        total = daily_counts(records, None, calendar).values
        summed = sum(
            daily_counts(records,
                         lambda lab, s=s, st_=st_: lab.stream is s and lab.status is st_,
                         calendar).values
            for s in Stream for st_ in Status)
        assert summed.tolist() == total.tolist()


class TestResponseIntervals:
    def test_hand_arithmetic(self):
        record = IncidentRecord(
            primary_key="X", problem="Sick", disposition="T",
            t_phone_pickup=datetime(2020, 1, 1, 12, 0, 0),
            t_assigned=datetime(2020, 1, 1, 12, 1, 2))
        out = response_intervals(record)
        assert out.assignment_min == pytest.approx(62 / 60)
        assert out.dispatch_min is None

    def test_all_equal_gives_zeros(self):
        t = datetime(2020, 1, 1, 12, 0, 0)
        record = IncidentRecord(primary_key="X", problem="S", disposition="T",
                                t_phone_pickup=t, t_assigned=t, t_enroute=t,
                                t_arrived=t)
        out = response_intervals(record)
        assert (out.assignment_min, out.dispatch_min, out.arrival_min) == (0, 0, 0)

    def test_partiality_rule(self):
        record = IncidentRecord(
            primary_key="X", problem="S", disposition="T",
            t_phone_pickup=datetime(2020, 1, 1, 12, 0),
            t_assigned=None,
            t_enroute=datetime(2020, 1, 1, 12, 4),
            t_arrived=datetime(2020, 1, 1, 12, 9))
        out = response_intervals(record)
        assert out.assignment_min is None
        assert out.dispatch_min is None
        assert out.arrival_min == pytest.approx(5.0)

    def test_negative_interval_is_flagged_error(self):
        record = IncidentRecord(
            primary_key="X", problem="S", disposition="T",
            t_enroute=datetime(2020, 1, 1, 12, 5),
            t_arrived=datetime(2020, 1, 1, 12, 3))
        with pytest.raises(FlaggedRecordError):
            response_intervals(record)


class TestParseHospitalization:
    def test_two_rows(self):
        s = parse_hospitalization("date,count\n2020-04-09,5\n2020-04-10,7\n")
        assert len(s) == 2
        assert s.start_date == date(2020, 4, 9)

    def test_gap_error_names_missing_date(self):
        with pytest.raises(GapError, match="2020-04-10"):
            parse_hospitalization("date,count\n2020-04-09,5\n2020-04-11,7\n")

    def test_negative_count_rejected(self):
        with pytest.raises(DomainError):
            parse_hospitalization("date,count\n2020-04-09,-1\n")

    def test_full_window_has_267_days(self):
        days = []
        day = date(2020, 4, 9)
        while day <= date(2020, 12, 31):
            days.append(f"{day.isoformat()},1")
            from datetime import timedelta
            day += timedelta(days=1)
        s = parse_hospitalization("date,count\n" + "\n".join(days) + "\n")
        assert len(s) == 267
